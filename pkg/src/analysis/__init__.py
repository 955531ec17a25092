"""KKT analysis: active sets, multiplier polytopes, constraint qualifications"""

from .cq import CQ_NAMES, CQReport, CRCQVerdict, check_cq, crcq_sampled
from .critical import CriticalCone, critical_cone
from .kkt import ActiveSetInfo, KKTResidual, PrimalDualPoint, classify_active, kkt_residual
from .polytope import MultiplierPolytope, build_multiplier_polytope

__all__ = [
    "CQ_NAMES",
    "ActiveSetInfo",
    "CQReport",
    "CRCQVerdict",
    "CriticalCone",
    "KKTResidual",
    "MultiplierPolytope",
    "PrimalDualPoint",
    "build_multiplier_polytope",
    "check_cq",
    "classify_active",
    "crcq_sampled",
    "critical_cone",
    "kkt_residual",
]
