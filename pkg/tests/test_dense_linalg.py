import numpy as np
import pytest

from src.errors import DimensionMismatchError, SingularMatrixError
from src.linalg import (
    independent_rows,
    is_positive_definite,
    lsqr_solve,
    lu_factor,
    lu_solve,
    matrix_rank,
    null_space,
    qr_rank,
)
from src.linalg.dense import min_eigenvalue


def test_lu_solves_both_orientations(rng):
    A = rng.normal(size=(5, 5)) + 5 * np.eye(5)
    B = rng.normal(size=(5, 3))
    factors = lu_factor(A)
    assert np.allclose(A @ lu_solve(factors, B), B)
    assert np.allclose(A.T @ lu_solve(factors, B, trans=True), B)


def test_lu_breakdown_reports_pivot():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError) as err:
        lu_factor(A)
    assert err.value.details["size"] == 2
    with pytest.raises(SingularMatrixError):
        lu_factor(np.zeros((3, 3)))


def test_lu_rejects_bad_shapes():
    with pytest.raises(DimensionMismatchError):
        lu_factor(np.ones((2, 3)))
    with pytest.raises(DimensionMismatchError):
        lu_solve(lu_factor(np.eye(2)), np.ones(3))
    with pytest.raises(DimensionMismatchError):
        lu_factor([[1.0, np.nan], [0.0, 1.0]])


def test_empty_factorization():
    factors = lu_factor(np.zeros((0, 0)))
    assert lu_solve(factors, np.zeros(0)).shape == (0,)


def test_rank_and_null_space(rng):
    U = rng.normal(size=(6, 2))
    A = U @ rng.normal(size=(2, 4))
    factors, rank = qr_rank(A)
    assert rank == 2
    assert matrix_rank(A) == 2
    assert np.allclose(factors.q @ factors.r, A[:, factors.perm])

    Z = null_space(A)
    assert Z.shape == (4, 2)
    assert np.allclose(A @ Z, 0.0, atol=1e-10)
    assert np.allclose(Z.T @ Z, np.eye(2))


def test_null_space_of_empty_matrix():
    assert np.array_equal(null_space(np.zeros((0, 3))), np.eye(3))
    assert null_space(np.zeros((0, 0)), n=2).shape == (2, 2)


def test_rank_tolerance_is_validated():
    with pytest.raises(ValueError):
        qr_rank(np.eye(2), rank_tol=0.0)


def test_independent_rows_of_duplicated_gradients():
    rows = independent_rows(np.array([[1.0], [1.0], [2.0]]))
    assert rows.size == 1


def test_lsqr_matches_lstsq(rng):
    A = rng.normal(size=(8, 3))
    b = rng.normal(size=8)
    result = lsqr_solve(A, b)
    expected = np.linalg.lstsq(A, b, rcond=None)[0]
    assert result.converged
    assert np.allclose(result.x, expected, atol=1e-7)


def test_lsqr_minimum_norm_on_rank_deficient():
    A = np.array([[1.0, 1.0]])
    result = lsqr_solve(A, [2.0])
    assert np.allclose(result.x, [1.0, 1.0])
    assert result.residual_norm == pytest.approx(0.0, abs=1e-10)


def test_positive_definiteness_with_shift():
    assert is_positive_definite(np.diag([1.0, 2.0]))
    assert not is_positive_definite(np.diag([1.0, 0.0]))
    assert not is_positive_definite(np.diag([1.0, -1.0]))
    assert is_positive_definite(np.zeros((0, 0)))
    assert min_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1.0)
