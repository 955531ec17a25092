"""Lexicographic minimum of vectors and of matrix rows."""

import numpy as np

from src.errors import DimensionMismatchError


def lex_leq(x, y) -> bool:
    """True iff x precedes or equals y in the lexicographic order."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"cannot compare vectors of lengths {x.size} and {y.size}")
    differ = np.flatnonzero(x != y)
    return differ.size == 0 or bool(x[differ[0]] < y[differ[0]])


def lmin(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    return x.copy() if lex_leq(x, y) else y.copy()


def lmmin(X, Y) -> np.ndarray:
    """Row-wise lmin of two matrices of equal shape."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise DimensionMismatchError(f"cannot compare matrices of shapes {X.shape} and {Y.shape}")
    if X.shape[0] == 0:
        return X.copy()
    return np.vstack([lmin(x, y) for x, y in zip(X, Y)])
