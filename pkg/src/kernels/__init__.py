"""Small dense LP, QP and vertex-enumeration kernels"""

from .lp import LinearProgram, LPResult, lp_kkt_residual, lp_maximize, lp_solve
from .qp import QPResult, QuadraticProgram, qp_kkt_residual, qp_solve
from .vertices import PolytopeVertices, enumerate_vertices

__all__ = [
    "LPResult",
    "LinearProgram",
    "PolytopeVertices",
    "QPResult",
    "QuadraticProgram",
    "enumerate_vertices",
    "lp_kkt_residual",
    "lp_maximize",
    "lp_solve",
    "qp_kkt_residual",
    "qp_solve",
]
