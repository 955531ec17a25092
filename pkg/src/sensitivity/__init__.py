"""Solution sensitivities: regular, directional, degenerate and lexicographic"""

from .directional import (
    DempeSelection,
    DirectionalDerivative,
    LDDerivative,
    LDStage,
    degenerate_directional,
    dempe_lp,
    directional_qp,
    ld_derivative,
)
from .fiacco import (
    FiaccoSystem,
    Regime,
    SensitivityResult,
    adjoint_sensitivity,
    build_fiacco_system,
    fiacco_jacobian,
    forward_sensitivity,
    lp_basis_sensitivity,
)
from .lexicographic import lex_leq, lmin, lmmin

__all__ = [
    "DempeSelection",
    "DirectionalDerivative",
    "FiaccoSystem",
    "LDDerivative",
    "LDStage",
    "Regime",
    "SensitivityResult",
    "adjoint_sensitivity",
    "build_fiacco_system",
    "degenerate_directional",
    "dempe_lp",
    "directional_qp",
    "fiacco_jacobian",
    "forward_sensitivity",
    "ld_derivative",
    "lex_leq",
    "lmin",
    "lmmin",
    "lp_basis_sensitivity",
]
