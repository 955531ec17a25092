"""Residual map of the homogeneous self-dual embedding and its implicit derivative.

Primal form: min c'x s.t. Ax = b, x in K. Dual: max b'y s.t. c - A'y = s in K*.
With u = (x, y, tau), v = (s, 0, kappa) the embedding reads Q u = v for the
skew matrix Q below, and z = u - v recovers u = P_C(z).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.conic.cones import FREE, NONNEG, SOC, ZERO, ConeSpec, distance_to_cone, project_cone
from src.config import Config
from src.errors import (
    DimensionMismatchError,
    KernelError,
    KinkAtSolutionError,
    NotStationaryError,
    SingularMatrixError,
)
from src.kernels.lp import LinearProgram, lp_solve
from src.linalg.dense import lsqr_solve, lu_factor, lu_solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConicProblem:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cone: ConeSpec

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape != (b.size, c.size):
            raise DimensionMismatchError(f"A has shape {A.shape}, expected ({b.size}, {c.size})")
        if self.cone.dim != c.size:
            raise DimensionMismatchError(f"cone dimension {self.cone.dim} does not match n={c.size}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def embedding_cone(self) -> ConeSpec:
        return self.cone.hsd(self.m)


def skew_matrix(A, b, c) -> np.ndarray:
    """Q = [[0, -A', c], [A, 0, -b], [-c', b', 0]]."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    m, n = A.shape
    Q = np.zeros((n + m + 1, n + m + 1))
    Q[:n, n : n + m] = -A.T
    Q[:n, -1] = c
    Q[n : n + m, :n] = A
    Q[n : n + m, -1] = -b
    Q[-1, :n] = -c
    Q[-1, n : n + m] = b
    return Q


@dataclass(frozen=True)
class HSDPoint:
    """z with its Moreau parts u = P_C(z) and v = u - z."""

    z: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def tau(self) -> float:
        return float(self.u[-1])

    @property
    def kappa(self) -> float:
        return float(self.v[-1])

    @classmethod
    def from_z(cls, prob: ConicProblem, z) -> HSDPoint:
        z = np.asarray(z, dtype=float).reshape(-1)
        u = project_cone(prob.embedding_cone, z).u
        return cls(z, u, u - z)

    @classmethod
    def from_solution(cls, prob: ConicProblem, x, y, s) -> HSDPoint:
        """u = (x, y, 1), v = (s, 0, 0)."""
        u = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float), [1.0]])
        v = np.concatenate([np.asarray(s, dtype=float), np.zeros(prob.m + 1)])
        return cls(u - v, u, v)

    def split(self, prob: ConicProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, y, s) = (u_x, u_y, v_x) / tau."""
        n, m = prob.n, prob.m
        return self.u[:n] / self.tau, self.u[n : n + m] / self.tau, self.v[:n] / self.tau


@dataclass(frozen=True)
class ResidualResult:
    R: np.ndarray
    jacobian: np.ndarray
    differentiable: bool
    kinks: tuple[int, ...]


def residual_map(prob: ConicProblem, z, eps: float = Config.ACTIVE_TOL) -> ResidualResult:
    """R(z) = ((Q - I) P_C + I) z and J_z R = (Q - I) J P_C + I."""
    z = np.asarray(z, dtype=float).reshape(-1)
    Q = skew_matrix(prob.A, prob.b, prob.c)
    if z.size != Q.shape[0]:
        raise DimensionMismatchError(f"z has length {z.size}, expected {Q.shape[0]}")
    projection = project_cone(prob.embedding_cone, z, eps)
    I = np.eye(z.size)
    R = (Q - I) @ projection.u + z
    J = (Q - I) @ projection.jacobian + I
    if not projection.differentiable:
        logger.warning(f"Residual map evaluated at a projection kink (blocks {list(projection.kinks)})")
    return ResidualResult(R, J, projection.differentiable, projection.kinks)


def conic_kkt_residual(prob: ConicProblem, x, y, s) -> float:
    """Largest violation of Ax = b, A'y + s = c, x in K, s in K*, x's = 0."""
    x, y, s = (np.asarray(v, dtype=float).reshape(-1) for v in (x, y, s))
    return float(
        max(
            np.max(np.abs(prob.A @ x - prob.b), initial=0.0),
            np.max(np.abs(prob.A.T @ y + s - prob.c), initial=0.0),
            distance_to_cone(prob.cone, x),
            distance_to_cone(prob.cone.dual(), s),
            abs(x @ s),
        )
    )


@dataclass(frozen=True)
class ConicSensitivity:
    dx: np.ndarray
    dy: np.ndarray
    ds: np.ndarray
    least_squares: bool
    residual: float


def _perturbation(prob: ConicProblem, dA, db, dc) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dA = np.zeros_like(prob.A) if dA is None else np.atleast_2d(np.asarray(dA, dtype=float))
    db = np.zeros(prob.m) if db is None else np.asarray(db, dtype=float).reshape(-1)
    dc = np.zeros(prob.n) if dc is None else np.asarray(dc, dtype=float).reshape(-1)
    if dA.shape != prob.A.shape or db.size != prob.m or dc.size != prob.n:
        raise DimensionMismatchError("perturbation shapes do not match the problem data")
    return dA, db, dc


def conic_sensitivity(
    prob: ConicProblem,
    x,
    y,
    s,
    dA=None,
    db=None,
    dc=None,
    tol: float = 1e-7,
    eps: float = Config.ACTIVE_TOL,
    rank_tol: float = Config.RANK_TOL,
) -> ConicSensitivity:
    """Differential of (x, y, s) for a data perturbation (dA, db, dc).

    Solves J_z R dz = -dQ u and maps dz back through the quotient rule.
    J_z R is singular along z itself, so a failed LU falls back to LSQR on
    the system bordered with the row z'/|z|.
    """
    residual = conic_kkt_residual(prob, x, y, s)
    if residual > tol:
        raise NotStationaryError(
            f"conic solution violates the optimality conditions by {residual:.3e}",
            residual={"conic_kkt": residual},
        )

    point = HSDPoint.from_solution(prob, x, y, s)
    result = residual_map(prob, point.z, eps)
    if not result.differentiable:
        raise KinkAtSolutionError(result.kinks)

    dA, db, dc = _perturbation(prob, dA, db, dc)
    rhs = -skew_matrix(dA, db, dc) @ point.u
    dz = None
    try:
        dz = lu_solve(lu_factor(result.jacobian, rank_tol), rhs)
        if not np.all(np.isfinite(dz)) or np.linalg.norm(result.jacobian @ dz - rhs) > 1e-9 * (
            1.0 + np.linalg.norm(rhs)
        ):
            dz = None
    except SingularMatrixError:
        pass

    least_squares = dz is None
    if least_squares:
        border = point.z / np.linalg.norm(point.z)
        solution = lsqr_solve(np.vstack([result.jacobian, border]), np.concatenate([rhs, [0.0]]))
        if not solution.converged:
            logger.warning(f"LSQR stopped early (residual {solution.residual_norm:.3e})")
        dz = solution.x

    projection = project_cone(prob.embedding_cone, point.z, eps)
    du = projection.jacobian @ dz
    dv = du - dz
    n, m = prob.n, prob.m
    tau, dtau = point.tau, du[-1]
    xs, ys, ss = point.split(prob)
    dx = (du[:n] - xs * dtau) / tau
    dy = (du[n : n + m] - ys * dtau) / tau
    ds = (dv[:n] - ss * dtau) / tau
    logger.info(f"Conic sensitivity computed ({'least squares' if least_squares else 'LU'})")
    return ConicSensitivity(dx, dy, ds, least_squares, residual)


def conic_jacobian_b(prob: ConicProblem, x, y, s, **kwargs) -> np.ndarray:
    """dx/db, one column per unit perturbation of b."""
    columns = [conic_sensitivity(prob, x, y, s, db=np.eye(prob.m)[k], **kwargs).dx for k in range(prob.m)]
    return np.column_stack(columns) if columns else np.zeros((prob.n, 0))


def solve_polyhedral(prob: ConicProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve a conic program whose cone is polyhedral with the simplex kernel."""
    bounds = []
    for block in prob.cone.blocks:
        if block.kind == SOC:
            raise KernelError("second-order cone blocks need a supplied solution")
        bound = {ZERO: (0.0, 0.0), FREE: (None, None), NONNEG: (0.0, None)}[block.kind]
        bounds.extend([bound] * block.dim)

    result = lp_solve(LinearProgram(prob.c, prob.A, prob.b, bounds=tuple(bounds)))
    if not result.optimal:
        raise KernelError(f"conic LP ended {result.status}", status=result.status)
    # simplex duals enter with +A'l; the conic dual y is their negative
    y = -result.eq_duals
    return result.x, y, prob.c - prob.A.T @ y
