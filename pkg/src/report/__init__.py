"""Report schema and builders"""

from .builder import (
    barrier_trail,
    conic_model,
    cq_model,
    directional_model,
    error_model,
    finish,
    ld_model,
    new_report,
    oracle_model,
    path_model,
    plain,
    point_model,
    sensitivity_model,
    value_model,
)
from .schemas import Report

__all__ = [
    "Report",
    "barrier_trail",
    "conic_model",
    "cq_model",
    "directional_model",
    "error_model",
    "finish",
    "ld_model",
    "new_report",
    "oracle_model",
    "path_model",
    "plain",
    "point_model",
    "sensitivity_model",
    "value_model",
]
