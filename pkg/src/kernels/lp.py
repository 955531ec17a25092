"""Two-phase tableau simplex with Bland's rule for small dense LPs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.errors import CyclingError, DimensionMismatchError, KernelError
from src.linalg.dense import lu_factor, lu_solve

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-10


def _matrix(A, cols: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, cols))
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros((0, cols))
    A = np.atleast_2d(A)
    if A.shape[1] != cols:
        raise DimensionMismatchError(f"constraint matrix has {A.shape[1]} columns, expected {cols}")
    return A


def _vector(b, rows: int) -> np.ndarray:
    if b is None:
        b = np.zeros(0)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != rows:
        raise DimensionMismatchError(f"right-hand side has length {b.size}, expected {rows}")
    return b


@dataclass(frozen=True)
class LinearProgram:
    """min c'x s.t. A_eq x = b_eq, A_ub x <= b_ub, lo <= x <= hi.

    ``bounds`` holds one (lo, hi) pair per coordinate with ``None`` for an
    infinite side; variables are free when ``bounds`` is omitted.
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    bounds: tuple[tuple[float | None, float | None], ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        A_eq = _matrix(self.A_eq, n)
        A_ub = _matrix(self.A_ub, n)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "b_eq", _vector(self.b_eq, A_eq.shape[0]))
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_ub", _vector(self.b_ub, A_ub.shape[0]))

        bounds = self.bounds if self.bounds is not None else ((None, None),) * n
        if len(bounds) != n:
            raise DimensionMismatchError(f"{len(bounds)} bounds given for {n} variables")
        normalized = []
        for lo, hi in bounds:
            lo = None if lo is None or lo == -np.inf else float(lo)
            hi = None if hi is None or hi == np.inf else float(hi)
            if lo is not None and hi is not None and lo > hi:
                raise DimensionMismatchError(f"empty bound interval [{lo}, {hi}]")
            normalized.append((lo, hi))
        object.__setattr__(self, "bounds", tuple(normalized))

    @property
    def n(self) -> int:
        return self.c.size

    def negated(self) -> LinearProgram:
        """Same feasible set, objective -c (turns a max into a min)."""
        return LinearProgram(-self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub, self.bounds)


@dataclass(frozen=True)
class LPResult:
    """Solver output; duals follow L = c'x + l_eq'(A_eq x - b_eq) + l_ub'(A_ub x - b_ub).

    ``bound_duals`` is the reduced cost c + A_eq' l_eq + A_ub' l_ub: positive
    at an active lower bound, negative at an active upper bound. ``basis``
    lists the basic columns of the internal standard form.
    """

    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    eq_duals: np.ndarray | None = None
    ub_duals: np.ndarray | None = None
    bound_duals: np.ndarray | None = None
    basis: tuple[int, ...] = field(default=())
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _StandardForm:
    """min c'v s.t. A v = b, v >= 0 with x = shift + T v."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    shift: np.ndarray
    T: np.ndarray
    row_sign: np.ndarray
    m_eq: int
    m_ub: int


def _standard_form(lp: LinearProgram) -> _StandardForm:
    n = lp.n
    shift = np.zeros(n)
    columns = []
    upper_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        unit = np.zeros(n)
        unit[j] = 1.0
        if lo is not None:
            shift[j] = lo
            columns.append(unit)
            if hi is not None:
                upper_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    T = np.array(columns).T if columns else np.zeros((n, 0))
    n_v = T.shape[1]
    m_eq, m_ub, m_bd = lp.A_eq.shape[0], lp.A_ub.shape[0], len(upper_rows)
    n_slack = m_ub + m_bd

    A = np.zeros((m_eq + m_ub + m_bd, n_v + n_slack))
    b = np.zeros(m_eq + m_ub + m_bd)
    A[:m_eq, :n_v] = lp.A_eq @ T
    b[:m_eq] = lp.b_eq - lp.A_eq @ shift
    A[m_eq : m_eq + m_ub, :n_v] = lp.A_ub @ T
    A[m_eq : m_eq + m_ub, n_v : n_v + m_ub] = np.eye(m_ub)
    b[m_eq : m_eq + m_ub] = lp.b_ub - lp.A_ub @ shift
    for k, (col, width) in enumerate(upper_rows):
        row = m_eq + m_ub + k
        A[row, col] = 1.0
        A[row, n_v + m_ub + k] = 1.0
        b[row] = width

    row_sign = np.where(b < 0, -1.0, 1.0)
    A *= row_sign[:, None]
    b *= row_sign

    c = np.zeros(n_v + n_slack)
    c[:n_v] = T.T @ lp.c
    T_full = np.hstack([T, np.zeros((n, n_slack))])
    return _StandardForm(c, A, b, shift, T_full, row_sign, m_eq, m_ub)


class _Tableau:
    """Dense tableau [B^-1 A | B^-1 b] with Bland's entering and leaving rules."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int], max_iter: int):
        self.body = np.hstack([A, b[:, None]])
        self.basis = list(basis)
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, row: int, col: int):
        self.body[row] /= self.body[row, col]
        for i in range(self.body.shape[0]):
            if i != row and self.body[i, col] != 0.0:
                self.body[i] -= self.body[i, col] * self.body[row]
        self.basis[row] = col

    def run(self, c: np.ndarray, allowed: np.ndarray) -> str:
        while True:
            if self.iterations >= self.max_iter:
                raise CyclingError(
                    f"simplex exceeded {self.max_iter} pivots", iterations=self.iterations
                )
            reduced = c - c[self.basis] @ self.body[:, :-1]
            scale = 1.0 + np.max(np.abs(c), initial=0.0)
            candidates = np.flatnonzero(allowed & (reduced < -_COST_TOL * scale))
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])
            column = self.body[:, col]
            rows = np.flatnonzero(column > _PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = self.body[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            row = int(min(tied, key=lambda i: self.basis[i]))
            logger.debug(f"simplex pivot {self.iterations}: enter {col}, leave {self.basis[row]}")
            self.pivot(row, col)
            self.iterations += 1


def lp_solve(lp: LinearProgram, max_iter: int | None = None) -> LPResult:
    """Solve a small LP with the two-phase simplex method."""
    form = _standard_form(lp)
    m, N = form.A.shape
    if max_iter is None:
        max_iter = 50 * (m + N) + 100

    # phase 1 with one artificial per row
    A1 = np.hstack([form.A, np.eye(m)])
    tableau = _Tableau(A1, form.b.copy(), list(range(N, N + m)), max_iter)
    c1 = np.concatenate([np.zeros(N), np.ones(m)])
    tableau.run(c1, np.ones(N + m, dtype=bool))
    infeasibility = float(c1[tableau.basis] @ tableau.body[:, -1])
    if infeasibility > 1e-9 * (1.0 + np.max(np.abs(form.b), initial=0.0)):
        logger.debug(f"LP infeasible: phase-1 objective {infeasibility:.3e}")
        return LPResult(status=INFEASIBLE, iterations=tableau.iterations)

    # drive artificials out of the basis; rows where that is impossible are redundant
    keep = list(range(m))
    row = 0
    while row < len(tableau.basis):
        if tableau.basis[row] >= N:
            candidates = np.flatnonzero(np.abs(tableau.body[row, :N]) > 1e-9)
            if candidates.size:
                tableau.pivot(row, int(candidates[0]))
            else:
                tableau.body = np.delete(tableau.body, row, axis=0)
                del tableau.basis[row]
                del keep[row]
                continue
        row += 1
    tableau.body = np.delete(tableau.body, np.s_[N : N + m], axis=1)

    status = tableau.run(form.c, np.ones(N, dtype=bool))
    if status == UNBOUNDED:
        return LPResult(status=UNBOUNDED, iterations=tableau.iterations)

    basis = list(tableau.basis)
    v = np.zeros(N)
    pi = np.zeros(m)
    if basis:
        B = form.A[np.ix_(keep, basis)]
        factors = lu_factor(B, rank_tol=1e-13)
        v[basis] = lu_solve(factors, form.b[keep])
        pi[keep] = lu_solve(factors, form.c[basis], trans=True)
    v = np.maximum(v, 0.0)

    x = form.shift + form.T @ v
    lam = -pi * form.row_sign
    eq_duals = lam[: form.m_eq]
    ub_duals = np.maximum(lam[form.m_eq : form.m_eq + form.m_ub], 0.0)
    bound_duals = lp.c + lp.A_eq.T @ eq_duals + lp.A_ub.T @ ub_duals

    result = LPResult(
        status=OPTIMAL,
        x=x,
        objective=float(lp.c @ x),
        eq_duals=eq_duals,
        ub_duals=ub_duals,
        bound_duals=bound_duals,
        basis=tuple(int(j) for j in basis),
        iterations=tableau.iterations,
    )
    residual = lp_kkt_residual(lp, result)
    scale = 1.0 + max(
        np.max(np.abs(lp.c), initial=0.0),
        np.max(np.abs(x), initial=0.0),
        np.max(np.abs(form.b), initial=0.0),
    )
    if residual > 1e-8 * scale**2:
        logger.error(f"LP solution failed the KKT check: residual {residual:.3e}")
        raise KernelError("simplex result failed the KKT residual check", residual=residual)
    logger.debug(f"LP optimal after {tableau.iterations} pivots, objective {result.objective:.6g}")
    return result


def lp_kkt_residual(lp: LinearProgram, result: LPResult) -> float:
    """Largest violation of feasibility, dual sign and complementarity."""
    x = result.x
    parts = [0.0]
    if lp.A_eq.size:
        parts.append(np.max(np.abs(lp.A_eq @ x - lp.b_eq)))
    if lp.A_ub.size:
        slack = lp.b_ub - lp.A_ub @ x
        parts.append(np.max(np.maximum(-slack, 0.0)))
        parts.append(np.max(np.maximum(-result.ub_duals, 0.0)))
        parts.append(np.max(np.abs(result.ub_duals * slack)))

    reduced = result.bound_duals
    for j, (lo, hi) in enumerate(lp.bounds):
        positive, negative = max(reduced[j], 0.0), max(-reduced[j], 0.0)
        if lo is not None:
            parts.append(max(lo - x[j], 0.0))
            parts.append(positive * abs(x[j] - lo))
        else:
            parts.append(positive)
        if hi is not None:
            parts.append(max(x[j] - hi, 0.0))
            parts.append(negative * abs(hi - x[j]))
        else:
            parts.append(negative)
    return float(max(parts))


def lp_maximize(lp: LinearProgram, max_iter: int | None = None) -> LPResult:
    """Maximize c'x; the reported objective is the maximum."""
    result = lp_solve(lp.negated(), max_iter)
    if not result.optimal:
        return result
    return LPResult(
        status=result.status,
        x=result.x,
        objective=-result.objective,
        eq_duals=result.eq_duals,
        ub_duals=result.ub_duals,
        bound_duals=result.bound_duals,
        basis=result.basis,
        iterations=result.iterations,
    )
