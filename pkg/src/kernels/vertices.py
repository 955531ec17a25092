"""Vertex enumeration of {v : A v = b, v_i >= 0 for i in S} by basic solutions."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.config import Config
from src.errors import SingularMatrixError, VertexGuardError
from src.kernels.lp import LinearProgram, lp_solve
from src.linalg.dense import independent_rows, lu_factor, lu_solve, matrix_rank

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolytopeVertices:
    """Extreme points as rows of ``vertices`` plus enumeration metadata."""

    vertices: np.ndarray
    bases_tried: int
    bases_feasible: int
    exhaustive: bool = True
    bounded: bool = True

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def __iter__(self):
        return iter(self.vertices)


def _is_bounded(A: np.ndarray, signed: np.ndarray, free: np.ndarray) -> bool:
    """No nonzero recession direction: max sum(d_S) over {A d = 0, 0 <= d_S <= 1} is 0."""
    N = A.shape[1]
    if free.size and matrix_rank(A[:, free]) < free.size:
        return False
    if signed.size == 0:
        return True
    c = np.zeros(N)
    c[signed] = -1.0
    bounds = [(None, None)] * N
    for i in signed:
        bounds[i] = (0.0, 1.0)
    result = lp_solve(LinearProgram(c, A, np.zeros(A.shape[0]), bounds=tuple(bounds)))
    return result.optimal and -result.objective <= 1e-9


def _is_extreme(A: np.ndarray, v: np.ndarray, signed: np.ndarray, tol: float) -> bool:
    at_zero = [i for i in signed if abs(v[i]) <= tol]
    rows = [A] + [np.eye(A.shape[1])[at_zero]] if at_zero else [A]
    return matrix_rank(np.vstack(rows)) == A.shape[1]


def enumerate_vertices(
    A_eq,
    b_eq,
    sign_constrained,
    guard: int = Config.VERTEX_GUARD,
    tol: float = Config.VERTEX_TOL,
    sample: int | None = None,
    seed: int = 0,
) -> PolytopeVertices:
    """All basic feasible solutions of the polyhedron, deduplicated under ``tol``.

    More than ``guard`` sign-constrained columns raises VertexGuardError unless
    ``sample`` bases are drawn instead (the result is then non-exhaustive).
    """
    A = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b = np.asarray(b_eq, dtype=float).reshape(-1)
    N = A.shape[1]
    signed = np.array(sorted(set(int(i) for i in sign_constrained)), dtype=int)
    free = np.array([j for j in range(N) if j not in set(signed.tolist())], dtype=int)

    rows = independent_rows(A) if A.shape[0] else np.zeros(0, dtype=int)
    A_r, b_r = A[rows], b[rows]
    empty = np.zeros((0, N))

    # inconsistent equality system: empty polyhedron
    if A.shape[0] and rows.size < A.shape[0]:
        x_ls = np.linalg.lstsq(A_r, b_r, rcond=None)[0] if rows.size else np.zeros(N)
        if np.max(np.abs(A @ x_ls - b)) > 1e-8 * (1.0 + np.max(np.abs(b))):
            return PolytopeVertices(empty, 0, 0, True, True)

    bounded = _is_bounded(A_r if rows.size else np.zeros((0, N)), signed, free)
    if free.size and (rows.size < free.size or matrix_rank(A_r[:, free]) < free.size):
        logger.debug("free columns are dependent; the polyhedron contains a line")
        return PolytopeVertices(empty, 0, 0, True, False)

    k = rows.size - free.size
    if k > signed.size:
        return PolytopeVertices(empty, 0, 0, True, bounded)
    total = math.comb(signed.size, k)
    exhaustive = True
    if signed.size > guard:
        if sample is None:
            raise VertexGuardError(columns=int(signed.size), guard=guard)
        rng = np.random.default_rng(seed)
        combos = {tuple(sorted(rng.choice(signed, size=k, replace=False).tolist())) for _ in range(sample)}
        combos = sorted(combos)
        exhaustive = False
        logger.warning(f"sampling {len(combos)} of {total} bases; vertex list is not exhaustive")
    else:
        combos = itertools.combinations(signed.tolist(), k)

    found: list[np.ndarray] = []
    tried = feasible = 0
    for combo in combos:
        tried += 1
        columns = np.concatenate([free, np.array(combo, dtype=int)]).astype(int)
        v = np.zeros(N)
        if columns.size:
            try:
                factors = lu_factor(A_r[:, columns])
            except SingularMatrixError:
                continue
            v[columns] = lu_solve(factors, b_r)
        elif np.any(np.abs(b_r) > tol):
            continue
        if np.any(v[signed] < -tol):
            continue
        v[signed] = np.maximum(v[signed], 0.0)
        if A.shape[0] and np.max(np.abs(A @ v - b)) > 1e-8 * (1.0 + np.max(np.abs(b))):
            continue
        feasible += 1
        if any(np.max(np.abs(v - w)) <= tol for w in found):
            continue
        if _is_extreme(A, v, signed, tol):
            found.append(v)

    vertices = np.array(found) if found else empty
    logger.debug(f"{len(found)} vertices from {tried} bases ({feasible} feasible)")
    return PolytopeVertices(vertices, tried, feasible, exhaustive, bounded)
