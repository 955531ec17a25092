"""Critical cones (x-space) and critical sets (joint (x, p)-space)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.analysis.kkt import ActiveSetInfo
from src.kernels.lp import LinearProgram, lp_solve
from src.model.autodiff import DerivativeBundle


@dataclass(frozen=True)
class CriticalCone:
    """{d : E d = 0, G d <= 0}.

    ``equality_rows`` stacks the gradients of g and of the strongly active h;
    ``inequality_rows`` those of the weakly active h. In the joint version
    each row is [grad_x | grad_p].
    """

    equality_rows: np.ndarray
    inequality_rows: np.ndarray
    weakly_active: tuple[int, ...]
    joint: bool = False

    @property
    def dimension(self) -> int:
        return self.equality_rows.shape[1]

    def implicit_equalities(self, tol: float = 1e-9) -> tuple[int, ...]:
        """Weakly active rows with G_i d = 0 on the whole cone (one LP per row)."""
        G = self.inequality_rows
        if G.shape[0] == 0:
            return ()
        E = self.equality_rows
        size = self.dimension
        bounds = ((-1.0, 1.0),) * size
        implicit = []
        for i in range(G.shape[0]):
            # maximize -G_i d, i.e. minimize G_i d
            result = lp_solve(LinearProgram(G[i], E, np.zeros(E.shape[0]), G, np.zeros(G.shape[0]), bounds))
            if result.optimal and -result.objective <= tol * (1.0 + np.abs(G[i]).max()):
                implicit.append(i)
        return tuple(implicit)

    def span_rows(self, tol: float = 1e-9) -> np.ndarray:
        """Rows whose null space is the linear span of the cone."""
        implicit = list(self.implicit_equalities(tol))
        return np.vstack([self.equality_rows, self.inequality_rows[implicit]])


def critical_cone(
    bundle: DerivativeBundle,
    active: ActiveSetInfo,
    strongly_active: tuple[int, ...] | None = None,
    joint: bool = False,
) -> CriticalCone:
    """Critical cone at the multiplier whose strongly active set is given (default: the point's)."""
    strongly = tuple(active.strongly_active if strongly_active is None else strongly_active)
    weakly = tuple(i for i in active.active if i not in strongly)
    jac_g = bundle.jac_g if joint else bundle.jac_x_g
    jac_h = bundle.jac_h if joint else bundle.jac_x_h
    equality = np.vstack([jac_g, jac_h[list(strongly)]])
    inequality = jac_h[list(weakly)]
    return CriticalCone(equality, inequality, weakly, joint)
