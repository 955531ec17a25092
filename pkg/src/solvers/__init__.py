"""Built-in NLP solvers: SUMT barrier, barrier-KKT Newton and the KKT corrector"""

from .barrier import (
    BarrierKKTPoint,
    BarrierState,
    NewtonStep,
    barrier_hessians,
    barrier_kkt_residual,
    barrier_kkt_sensitivity,
    barrier_kkt_solve,
    barrier_sensitivity,
    barrier_sweep,
    find_interior_point,
    merit_value,
    sumt_solve,
)
from .corrector import CorrectionResult, guess_active, newton_correct

__all__ = [
    "BarrierKKTPoint",
    "BarrierState",
    "CorrectionResult",
    "NewtonStep",
    "barrier_hessians",
    "barrier_kkt_residual",
    "barrier_kkt_sensitivity",
    "barrier_kkt_solve",
    "barrier_sensitivity",
    "barrier_sweep",
    "find_interior_point",
    "guess_active",
    "merit_value",
    "newton_correct",
    "sumt_solve",
]
