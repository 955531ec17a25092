"""Dense factorization kernels: LU, rank-revealing QR, null spaces, LSQR."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import lsqr

from src.config import Config
from src.errors import DimensionMismatchError, SingularMatrixError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LUFactors:
    """Packed LU factors with row pivots (scipy ``lu_factor`` layout)."""

    lu: np.ndarray
    piv: np.ndarray
    n: int


@dataclass(frozen=True)
class QRFactors:
    """Q R = A[:, perm] with |R[i, i]| non-increasing."""

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray
    rank: int


@dataclass(frozen=True)
class LSQRResult:
    x: np.ndarray
    converged: bool
    residual_norm: float
    iterations: int


def as_matrix(A, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else np.zeros((0, cols or 0))
    if A.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got an array of shape {A.shape}")
    if rows is not None and A.shape[0] != rows:
        raise DimensionMismatchError(f"expected {rows} rows, got {A.shape[0]}")
    if cols is not None and A.shape[1] != cols:
        raise DimensionMismatchError(f"expected {cols} columns, got {A.shape[1]}")
    if not np.all(np.isfinite(A)):
        raise DimensionMismatchError("matrix entries must be finite")
    return A


def lu_factor(A, rank_tol: float = Config.RANK_TOL) -> LUFactors:
    """LU with partial pivoting; a pivot below rank_tol * max|A| is a breakdown."""
    A = as_matrix(A)
    n, cols = A.shape
    if n != cols:
        raise DimensionMismatchError(f"lu_factor needs a square matrix, got {A.shape}")
    if n == 0:
        return LUFactors(lu=np.zeros((0, 0)), piv=np.zeros(0, dtype=int), n=0)

    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        raise SingularMatrixError(pivot=0, size=n)

    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    small = np.flatnonzero(np.abs(np.diag(lu)) <= rank_tol * scale)
    if small.size:
        logger.debug(f"LU breakdown at pivot {small[0]} of {n}")
        raise SingularMatrixError(pivot=int(small[0]), size=n)
    return LUFactors(lu=lu, piv=piv, n=n)


def lu_solve(factors: LUFactors, B, trans: bool = False) -> np.ndarray:
    """Solve A X = B (or A^T X = B) for one or many right-hand sides."""
    B = np.asarray(B, dtype=float)
    if B.shape[0] != factors.n:
        raise DimensionMismatchError(f"right-hand side has {B.shape[0]} rows, expected {factors.n}")
    if factors.n == 0:
        return np.zeros_like(B)
    return scipy.linalg.lu_solve((factors.lu, factors.piv), B, trans=1 if trans else 0, check_finite=False)


def solve(A, B, rank_tol: float = Config.RANK_TOL) -> np.ndarray:
    return lu_solve(lu_factor(A, rank_tol), B)


def qr_rank(A, rank_tol: float = Config.RANK_TOL) -> tuple[QRFactors, int]:
    """Householder QR with column pivoting; rank counts |R[i,i]| > rank_tol * |R[0,0]|."""
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    A = as_matrix(A)
    rows, cols = A.shape
    if rows == 0 or cols == 0:
        factors = QRFactors(
            q=np.eye(rows), r=np.zeros((rows, cols)), perm=np.arange(cols), rank=0
        )
        return factors, 0

    q, r, perm = scipy.linalg.qr(A, pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    rank = 0 if diag[0] == 0.0 else int(np.count_nonzero(diag > rank_tol * diag[0]))
    return QRFactors(q=q, r=r, perm=perm, rank=rank), rank


def matrix_rank(A, rank_tol: float = Config.RANK_TOL) -> int:
    return qr_rank(A, rank_tol)[1]


def null_space(A, n: int | None = None, rank_tol: float = Config.RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of {d : A d = 0}."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        size = n if n is not None else (A.shape[1] if A.ndim == 2 else 0)
        return np.eye(size)
    A = as_matrix(A)
    factors, rank = qr_rank(A.T, rank_tol)
    return factors.q[:, rank:]


def independent_rows(A, rank_tol: float = Config.RANK_TOL) -> np.ndarray:
    """Indices of a maximal linearly independent subset of rows, in increasing order."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] == 0:
        return np.zeros(0, dtype=int)
    factors, rank = qr_rank(A.T, rank_tol)
    return np.sort(factors.perm[:rank])


def lsqr_solve(A, b, tol: float = 1e-10, max_iter: int | None = None) -> LSQRResult:
    """Least-squares solution of A x ~ b; ``converged`` is False when the iteration cap is hit."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != A.shape[0]:
        raise DimensionMismatchError(f"right-hand side has length {b.size}, expected {A.shape[0]}")
    if A.shape[1] == 0:
        return LSQRResult(np.zeros(0), True, float(np.linalg.norm(b)), 0)
    if max_iter is None:
        max_iter = 10 * max(A.shape) + 50

    x, istop, itn, r1norm = lsqr(A, b, atol=tol, btol=tol, iter_lim=max_iter)[:4]
    converged = istop != 7
    if not converged:
        logger.warning(f"LSQR stopped at the iteration cap ({max_iter}) with residual {r1norm:.3e}")
    return LSQRResult(x=np.asarray(x), converged=converged, residual_norm=float(r1norm), iterations=int(itn))


def is_positive_definite(H, shift: float = Config.PD_SHIFT) -> bool:
    """Cholesky of H - shift * max(1, ||H||) * I succeeds."""
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return True
    H = 0.5 * (H + H.T)
    scale = max(1.0, float(np.linalg.norm(H, ord=np.inf)))
    try:
        scipy.linalg.cholesky(H - shift * scale * np.eye(H.shape[0]), lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return False
    return True


def min_eigenvalue(H) -> float:
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return float("inf")
    return float(scipy.linalg.eigvalsh(0.5 * (H + H.T))[0])
