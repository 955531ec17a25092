"""Conic program differentiation through the self-dual embedding"""

from .cones import ConeBlock, ConeSpec, ProjectionResult, distance_to_cone, project_cone
from .loader import ConicFileModel, load_conic, to_problem
from .residual import (
    ConicProblem,
    ConicSensitivity,
    HSDPoint,
    ResidualResult,
    conic_jacobian_b,
    conic_kkt_residual,
    conic_sensitivity,
    residual_map,
    skew_matrix,
    solve_polyhedral,
)

__all__ = [
    "ConeBlock",
    "ConeSpec",
    "ConicFileModel",
    "ConicProblem",
    "ConicSensitivity",
    "HSDPoint",
    "ProjectionResult",
    "ResidualResult",
    "conic_jacobian_b",
    "conic_kkt_residual",
    "conic_sensitivity",
    "distance_to_cone",
    "load_conic",
    "project_cone",
    "residual_map",
    "skew_matrix",
    "solve_polyhedral",
    "to_problem",
]
