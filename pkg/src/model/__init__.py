"""Problem model: expression trees, text format and automatic differentiation"""

from .autodiff import (
    DerivativeBundle,
    LagrangianDerivatives,
    eval_derivatives,
    eval_values,
    lagrangian_derivatives,
    lagrangian_from_bundle,
)
from .expr import Expr, const, param, var
from .parser import load_problem, parse_problem, print_expr, print_problem
from .problem import ParametricNLP

__all__ = [
    "DerivativeBundle",
    "Expr",
    "LagrangianDerivatives",
    "ParametricNLP",
    "const",
    "eval_derivatives",
    "eval_values",
    "lagrangian_derivatives",
    "lagrangian_from_bundle",
    "load_problem",
    "param",
    "parse_problem",
    "print_expr",
    "print_problem",
    "var",
]
