"""Primal active-set method for small convex QPs."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.config import Config
from src.errors import (
    CyclingError,
    DimensionMismatchError,
    IndefiniteHessianError,
    InfeasibleProblemError,
    KernelError,
)
from src.kernels.lp import LinearProgram, lp_solve
from src.linalg.dense import independent_rows, is_positive_definite, lu_factor, lu_solve, null_space

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadraticProgram:
    """min 1/2 d'Hd + q'd s.t. A_eq d = b_eq, A_ub d <= b_ub (H symmetrized)."""

    H: np.ndarray
    q: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        q = np.asarray(self.q, dtype=float).reshape(-1)
        n = q.size
        if H.shape != (n, n):
            raise DimensionMismatchError(f"H has shape {H.shape}, expected ({n}, {n})")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "q", q)
        for name in ("eq", "ub"):
            A = getattr(self, f"A_{name}")
            A = np.zeros((0, n)) if A is None or np.size(A) == 0 else np.atleast_2d(np.asarray(A, dtype=float))
            b = getattr(self, f"b_{name}")
            b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
            if A.shape[1] != n or A.shape[0] != b.size:
                raise DimensionMismatchError(f"A_{name} {A.shape} and b_{name} {b.shape} do not match n={n}")
            object.__setattr__(self, f"A_{name}", A)
            object.__setattr__(self, f"b_{name}", b)

    @property
    def n(self) -> int:
        return self.q.size

    def objective(self, d: np.ndarray) -> float:
        return float(0.5 * d @ self.H @ d + self.q @ d)


@dataclass(frozen=True)
class QPResult:
    """Optimal point with multipliers of L = q'd + 1/2 d'Hd + l_eq'(A_eq d - b_eq) + l_ub'(A_ub d - b_ub)."""

    status: str
    x: np.ndarray
    eq_multipliers: np.ndarray
    ub_multipliers: np.ndarray
    working_set: tuple[int, ...]
    iterations: int


def _feasible_start(qp: QuadraticProgram, tol: float) -> np.ndarray:
    """Elastic phase-1 LP; an infeasible system is reported with its worst row."""
    n, m_eq, m_ub = qp.n, qp.A_eq.shape[0], qp.A_ub.shape[0]
    if m_eq + m_ub == 0:
        return np.zeros(n)

    width = n + 2 * m_eq + m_ub
    c = np.concatenate([np.zeros(n), np.ones(2 * m_eq + m_ub)])
    A_eq = np.hstack([qp.A_eq, np.eye(m_eq), -np.eye(m_eq), np.zeros((m_eq, m_ub))])
    A_ub = np.hstack([qp.A_ub, np.zeros((m_ub, 2 * m_eq)), -np.eye(m_ub)])
    bounds = ((None, None),) * n + ((0.0, None),) * (width - n)
    result = lp_solve(LinearProgram(c, A_eq, qp.b_eq, A_ub, qp.b_ub, bounds))
    if not result.optimal:
        raise InfeasibleProblemError(f"phase-1 LP ended {result.status}")

    slack = result.x[n:]
    scale = 1.0 + np.max(np.abs(np.concatenate([qp.b_eq, qp.b_ub])), initial=0.0)
    if result.objective > tol * scale:
        eq_slack = slack[:m_eq] + slack[m_eq : 2 * m_eq]
        ub_slack = slack[2 * m_eq :]
        if eq_slack.size and (not ub_slack.size or eq_slack.max() >= ub_slack.max()):
            row, kind = int(np.argmax(eq_slack)), "eq"
        else:
            row, kind = int(np.argmax(ub_slack)), "ineq"
        raise InfeasibleProblemError(
            f"QP constraints are inconsistent; {kind} row {row} is violated by "
            f"{max(eq_slack.max(initial=0.0), ub_slack.max(initial=0.0)):.3e}",
            row=row,
            kind=kind,
        )
    return result.x[:n]


def qp_solve(
    qp: QuadraticProgram,
    tol: float = 1e-10,
    max_iter: int | None = None,
    pd_shift: float = Config.PD_SHIFT,
) -> QPResult:
    """Solve a convex QP by the primal active-set method.

    The reduced Hessian on each working set must be positive definite; an
    indefinite one raises IndefiniteHessianError.
    """
    n = qp.n
    m_ub = qp.A_ub.shape[0]
    if max_iter is None:
        max_iter = 50 * (n + m_ub + qp.A_eq.shape[0]) + 50

    eq_rows = independent_rows(qp.A_eq) if qp.A_eq.shape[0] else np.zeros(0, dtype=int)
    A_E = qp.A_eq[eq_rows]

    d = _feasible_start(qp, tol=1e-9)

    working: list[int] = []
    if m_ub:
        residual = qp.A_ub @ d - qp.b_ub
        scale = 1.0 + np.abs(qp.b_ub)
        for i in np.flatnonzero(np.abs(residual) <= 1e-9 * scale):
            trial = np.vstack([A_E, qp.A_ub[working + [int(i)]]])
            if independent_rows(trial).size == trial.shape[0]:
                working.append(int(i))

    lam_E = np.zeros(A_E.shape[0])
    lam_W = np.zeros(0)
    for iteration in range(max_iter):
        A_W = np.vstack([A_E, qp.A_ub[working]]) if working else A_E
        k = A_W.shape[0]

        Z = null_space(A_W, n=n)
        if Z.shape[1] and not is_positive_definite(Z.T @ qp.H @ Z, pd_shift):
            raise IndefiniteHessianError(
                "reduced Hessian is not positive definite on the working set",
                working_set=list(working),
            )

        gradient = qp.H @ d + qp.q
        K = np.zeros((n + k, n + k))
        K[:n, :n] = qp.H
        K[:n, n:] = A_W.T
        K[n:, :n] = A_W
        solution = lu_solve(lu_factor(K, rank_tol=1e-14), np.concatenate([-gradient, np.zeros(k)]))
        step, multipliers = solution[:n], solution[n:]
        lam_E, lam_W = multipliers[: A_E.shape[0]], multipliers[A_E.shape[0] :]

        if np.linalg.norm(step, np.inf) <= tol * (1.0 + np.linalg.norm(d, np.inf)):
            d = d + step
            if lam_W.size == 0 or lam_W.min() >= -tol * (1.0 + np.abs(lam_W).max()):
                break
            drop = int(np.argmin(lam_W))
            logger.debug(f"QP iteration {iteration}: drop constraint {working[drop]}")
            del working[drop]
            continue

        alpha, blocking = 1.0, None
        if m_ub:
            rates = qp.A_ub @ step
            for i in range(m_ub):
                if i in working or rates[i] <= 1e-14 * (1.0 + np.abs(qp.A_ub[i]).max()):
                    continue
                ratio = max((qp.b_ub[i] - qp.A_ub[i] @ d) / rates[i], 0.0)
                if ratio < alpha:
                    alpha, blocking = ratio, i
        d = d + alpha * step
        if blocking is not None:
            logger.debug(f"QP iteration {iteration}: add constraint {blocking} (step {alpha:.3e})")
            working.append(blocking)
    else:
        raise CyclingError(f"active-set QP did not finish in {max_iter} iterations")

    eq_multipliers = np.zeros(qp.A_eq.shape[0])
    eq_multipliers[eq_rows] = lam_E
    ub_multipliers = np.zeros(m_ub)
    if working:
        ub_multipliers[working] = np.maximum(lam_W, 0.0)

    result = QPResult(
        status="optimal",
        x=d,
        eq_multipliers=eq_multipliers,
        ub_multipliers=ub_multipliers,
        working_set=tuple(sorted(working)),
        iterations=iteration + 1,
    )
    residual = qp_kkt_residual(qp, result)
    scale = 1.0 + max(np.abs(qp.H).max(initial=0.0), np.abs(qp.q).max(initial=0.0), np.abs(d).max(initial=0.0))
    if residual > 1e-8 * scale**2:
        logger.error(f"QP solution failed the KKT check: residual {residual:.3e}")
        raise KernelError("active-set result failed the KKT residual check", residual=residual)
    return result


def qp_kkt_residual(qp: QuadraticProgram, result: QPResult) -> float:
    """Largest violation of stationarity, feasibility, complementarity and sign."""
    d = result.x
    gradient = qp.H @ d + qp.q + qp.A_eq.T @ result.eq_multipliers + qp.A_ub.T @ result.ub_multipliers
    parts = [float(np.max(np.abs(gradient), initial=0.0))]
    if qp.A_eq.size:
        parts.append(float(np.max(np.abs(qp.A_eq @ d - qp.b_eq))))
    if qp.A_ub.size:
        slack = qp.b_ub - qp.A_ub @ d
        parts.append(float(np.max(np.maximum(-slack, 0.0))))
        parts.append(float(np.max(np.maximum(-result.ub_multipliers, 0.0))))
        parts.append(float(np.max(np.abs(result.ub_multipliers * slack))))
    return max(parts)
