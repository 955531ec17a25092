"""Optimal value function derivatives and Dini bounds"""

from .value_function import (
    DirectionalValue,
    ValueReport,
    dini_bounds,
    directional_summary,
    shadow_prices,
    value_directional,
    value_gradient_hessian,
    value_gradient_objective_only,
)

__all__ = [
    "DirectionalValue",
    "ValueReport",
    "dini_bounds",
    "directional_summary",
    "shadow_prices",
    "value_directional",
    "value_gradient_hessian",
    "value_gradient_objective_only",
]
