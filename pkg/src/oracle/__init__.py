"""Finite-difference re-solve oracle"""

from .fd_oracle import (
    DiniQuotients,
    FDDirectional,
    FDJacobian,
    FDValueDerivatives,
    OracleConfig,
    Resolution,
    compare,
    fd_dini_quotients,
    fd_directional,
    fd_jacobian,
    fd_jacobian_async,
    fd_value_derivatives,
    resolve,
)

__all__ = [
    "DiniQuotients",
    "FDDirectional",
    "FDJacobian",
    "FDValueDerivatives",
    "OracleConfig",
    "Resolution",
    "compare",
    "fd_dini_quotients",
    "fd_directional",
    "fd_jacobian",
    "fd_jacobian_async",
    "fd_value_derivatives",
    "resolve",
]
