"""Regular-case sensitivities from the differentiated KKT system."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from src.analysis.cq import CQReport, check_cq
from src.analysis.kkt import PrimalDualPoint
from src.errors import (
    DimensionMismatchError,
    NonSquareBasisError,
    NotAnLPError,
    SingularMatrixError,
    ToleranceConflictError,
)
from src.linalg.dense import LUFactors, lu_factor, lu_solve
from src.model.autodiff import DerivativeBundle, eval_derivatives, lagrangian_from_bundle
from src.model.expr import is_affine_in_x
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    FIACCO = "fiacco"
    DIRECTIONAL = "directional"
    DEGENERATE = "degenerate"
    BARRIER = "barrier"
    CONIC = "conic"


@dataclass(frozen=True)
class SensitivityResult:
    """Jacobians of the primal-dual solution; rows of inactive multipliers are exact zeros."""

    jac_x: np.ndarray
    jac_y: np.ndarray
    jac_z: np.ndarray
    regime: Regime
    cq: CQReport | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def column(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.jac_x[:, k], self.jac_y[:, k], self.jac_z[:, k]

    def apply(self, h) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = np.asarray(h, dtype=float)
        return self.jac_x @ h, self.jac_y @ h, self.jac_z @ h


@dataclass(frozen=True)
class FiaccoSystem:
    """M dw = -N dp over w = (x, y, z_A), with M factored once.

    M = [[H, J_g', J_hA'], [J_g, 0, 0], [J_hA, 0, 0]] and
    N = [H_xp; J_p g; J_p h_A].
    """

    M: np.ndarray
    N: np.ndarray
    active: tuple[int, ...]
    n: int
    m_e: int
    m_i: int
    factors: LUFactors

    @property
    def size(self) -> int:
        return self.M.shape[0]

    @property
    def ell(self) -> int:
        return self.N.shape[1]

    def expand(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a w-space vector (or matrix) into (x, y, full-length z) blocks."""
        w = np.asarray(w, dtype=float)
        dx = w[: self.n]
        dy = w[self.n : self.n + self.m_e]
        dz = np.zeros((self.m_i,) + w.shape[1:])
        dz[list(self.active)] = w[self.n + self.m_e :]
        return dx, dy, dz

    def summary(self) -> dict[str, Any]:
        return {
            "active": list(self.active),
            "size": self.size,
            "condition": float(np.linalg.cond(self.M)) if self.size else 1.0,
        }


def build_fiacco_system(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    active,
    bundle: DerivativeBundle | None = None,
) -> FiaccoSystem:
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    active = tuple(int(i) for i in active)
    lag = lagrangian_from_bundle(bundle, point.y, point.z)
    n, m_e, k = nlp.n, nlp.m_e, len(active)
    J = np.vstack([bundle.jac_x_g, bundle.jac_x_h[list(active)]])

    size = n + m_e + k
    M = np.zeros((size, size))
    M[:n, :n] = lag.hess_xx
    M[:n, n:] = J.T
    M[n:, :n] = J
    N = np.vstack([lag.hess_xp, bundle.jac_p_g, bundle.jac_p_h[list(active)]])

    factors = lu_factor(M)
    return FiaccoSystem(M, N, active, n, m_e, nlp.m_i, factors)


def fiacco_jacobian(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    cq: CQReport | None = None,
    bundle: DerivativeBundle | None = None,
) -> SensitivityResult:
    """Full Jacobians under LICQ, SCS and SOSC: one LU factorization, ell backsolves."""
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle)
    cq.require("licq", "scs", "sosc_subspace", context="fiacco_jacobian")

    try:
        system = build_fiacco_system(nlp, point, cq.active.active, bundle)
    except SingularMatrixError as e:
        logger.error(f"KKT matrix singular despite certified regularity: {e}")
        raise ToleranceConflictError(
            "KKT matrix is singular although LICQ and SOSC-subspace were certified; "
            "the certificates and the factorization disagree under the current tolerances",
            pivot=e.pivot,
        ) from e

    solution = -lu_solve(system.factors, system.N)
    jac_x, jac_y, jac_z = system.expand(solution)
    logger.info(f"Fiacco sensitivities computed ({system.size}x{system.size} system, {nlp.ell} backsolves)")
    return SensitivityResult(
        jac_x=jac_x, jac_y=jac_y, jac_z=jac_z, regime=Regime.FIACCO, cq=cq, details={"system": system}
    )


def forward_sensitivity(system: FiaccoSystem, u) -> np.ndarray:
    """-M^-1 (N u), the directional primal-dual derivative along u."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != system.ell:
        raise DimensionMismatchError(f"direction has length {u.size}, expected {system.ell}")
    return -lu_solve(system.factors, system.N @ u)


def adjoint_sensitivity(system: FiaccoSystem, v) -> np.ndarray:
    """-N' (M^-T v), so that <forward(u), v> = <u, adjoint(v)>."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != system.size:
        raise DimensionMismatchError(f"adjoint seed has length {v.size}, expected {system.size}")
    return -system.N.T @ lu_solve(system.factors, v, trans=True)


def lp_basis_sensitivity(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    cq: CQReport | None = None,
    basis=None,
    bundle: DerivativeBundle | None = None,
) -> SensitivityResult:
    """LP sensitivities from the basis matrix of the n binding rows.

    Primal: B J_x = -[J_p g; J_p h_A]. Dual: B' J_lambda = -H_xp.
    """
    non_affine = [label for label, expr in nlp.labelled_expressions() if not is_affine_in_x(expr)]
    if non_affine:
        raise NotAnLPError(f"not affine in x: {', '.join(non_affine)}", functions=non_affine)

    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle, crcq=False)
    cq.require("licq", "scs", context="lp_basis_sensitivity")

    active = list(cq.active.active)
    binding = nlp.m_e + len(active)
    if binding != nlp.n:
        raise NonSquareBasisError(
            f"{binding} binding rows for n={nlp.n}; the LP is degenerate, use the degenerate pipeline",
            binding=binding,
            n=nlp.n,
        )

    B = np.vstack([bundle.jac_x_g, bundle.jac_x_h[active]]) if basis is None else np.asarray(basis, dtype=float)
    if B.shape != (nlp.n, nlp.n):
        raise NonSquareBasisError(f"basis matrix has shape {B.shape}, expected ({nlp.n}, {nlp.n})")

    factors = lu_factor(B)
    rhs = np.vstack([bundle.jac_p_g, bundle.jac_p_h[active]])
    jac_x = -lu_solve(factors, rhs)
    lag = lagrangian_from_bundle(bundle, point.y, point.z)
    jac_lambda = -lu_solve(factors, lag.hess_xp, trans=True)

    jac_y = jac_lambda[: nlp.m_e]
    jac_z = np.zeros((nlp.m_i, nlp.ell))
    jac_z[active] = jac_lambda[nlp.m_e :]
    logger.info(f"LP basis sensitivities from a {nlp.n}x{nlp.n} basis")
    return SensitivityResult(jac_x, jac_y, jac_z, Regime.FIACCO, cq, details={"basis": B})
