"""Parametric nonlinear program container."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from src.errors import DimensionMismatchError
from src.model.expr import Expr, depends_on_params, max_indices, to_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParametricNLP:
    """min f(x,p) s.t. g(x,p) = 0, h(x,p) <= 0.

    ``p0`` and ``x0`` are the optional default parameter and strictly feasible
    start read from the problem file.
    """

    n: int
    ell: int
    objective: Expr
    equalities: tuple[Expr, ...] = ()
    inequalities: tuple[Expr, ...] = ()
    name: str = "unnamed"
    var_names: tuple[str, ...] = ()
    param_names: tuple[str, ...] = ()
    p0: tuple[float, ...] | None = None
    x0: tuple[float, ...] | None = None
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"x{i + 1}" for i in range(self.n)))
        if not self.param_names:
            object.__setattr__(self, "param_names", tuple(f"p{i + 1}" for i in range(self.ell)))
        if len(self.var_names) != self.n or len(self.param_names) != self.ell:
            raise DimensionMismatchError("name lists do not match the declared dimensions")

        for label, expr in self.labelled_expressions():
            max_var, max_param = max_indices(expr)
            if max_var >= self.n or max_param >= self.ell:
                raise DimensionMismatchError(
                    f"{label} references an index outside n={self.n}, ell={self.ell}"
                )

        if self.p0 is not None and len(self.p0) != self.ell:
            raise DimensionMismatchError(f"default parameter has length {len(self.p0)}, expected {self.ell}")
        if self.x0 is not None and len(self.x0) != self.n:
            raise DimensionMismatchError(f"start point has length {len(self.x0)}, expected {self.n}")

        if self.m_e > self.n:
            logger.warning(f"{self.name}: {self.m_e} equalities exceed n={self.n}; LICQ cannot hold")
            object.__setattr__(self, "flags", self.flags + ("overdetermined",))

    @property
    def m_e(self) -> int:
        return len(self.equalities)

    @property
    def m_i(self) -> int:
        return len(self.inequalities)

    @property
    def functions(self) -> tuple[Expr, ...]:
        """Objective, equalities and inequalities in evaluation order."""
        return (self.objective,) + self.equalities + self.inequalities

    def labelled_expressions(self) -> list[tuple[str, Expr]]:
        labelled = [("objective", self.objective)]
        labelled += [(f"eq[{i}]", e) for i, e in enumerate(self.equalities)]
        labelled += [(f"ineq[{i}]", e) for i, e in enumerate(self.inequalities)]
        return labelled

    def constraints_depend_on_params(self) -> bool:
        return any(depends_on_params(e) for e in self.equalities + self.inequalities)

    def text(self, expr: Expr) -> str:
        return to_text(expr, self.var_names, self.param_names)
