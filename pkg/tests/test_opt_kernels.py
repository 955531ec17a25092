import numpy as np
import pytest
from scipy.optimize import linprog, minimize

from src.errors import IndefiniteHessianError, InfeasibleProblemError, VertexGuardError
from src.kernels import (
    LinearProgram,
    QuadraticProgram,
    enumerate_vertices,
    lp_kkt_residual,
    lp_maximize,
    lp_solve,
    qp_kkt_residual,
    qp_solve,
)


def _random_lp(rng, n=4, m_ub=6, m_eq=1):
    x_feasible = rng.uniform(0.5, 2.0, size=n)
    A_ub = rng.normal(size=(m_ub, n))
    b_ub = A_ub @ x_feasible + rng.uniform(0.1, 1.0, size=m_ub)
    A_eq = rng.normal(size=(m_eq, n))
    b_eq = A_eq @ x_feasible
    c = rng.normal(size=n)
    return LinearProgram(c, A_eq, b_eq, A_ub, b_ub, bounds=((0.0, 5.0),) * n)


def test_random_lps_agree_with_highs(rng):
    for _ in range(10):
        lp = _random_lp(rng)
        result = lp_solve(lp)
        reference = linprog(lp.c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, bounds=lp.bounds, method="highs")
        assert result.optimal
        assert result.objective == pytest.approx(reference.fun, abs=1e-8)
        assert lp_kkt_residual(lp, result) <= 1e-8


def test_lp_duals_follow_lagrangian_sign():
    # every feasible point is optimal; the equality dual is -1
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0]], [1.0], bounds=((0.0, None), (0.0, None)))
    result = lp_solve(lp)
    assert result.eq_duals == pytest.approx([-1.0])
    assert result.bound_duals == pytest.approx([0.0, 0.0], abs=1e-12)


def test_lp_infeasible_and_unbounded():
    infeasible = LinearProgram([1.0], A_ub=[[1.0], [-1.0]], b_ub=[-1.0, -1.0])
    assert lp_solve(infeasible).status == "infeasible"
    unbounded = LinearProgram([-1.0], bounds=((0.0, None),))
    assert lp_solve(unbounded).status == "unbounded"


def test_lp_maximize_reports_maximum():
    lp = LinearProgram([1.0, 2.0], A_ub=[[1.0, 1.0]], b_ub=[3.0], bounds=((0.0, None), (0.0, None)))
    result = lp_maximize(lp)
    assert result.objective == pytest.approx(6.0)
    assert result.x == pytest.approx([0.0, 3.0])


def test_random_qps_agree_with_slsqp(rng):
    for _ in range(10):
        n = 3
        M = rng.normal(size=(n, n))
        H = M @ M.T + np.eye(n)
        q = rng.normal(size=n)
        A_ub = rng.normal(size=(4, n))
        b_ub = rng.uniform(0.1, 1.0, size=4)
        A_eq = rng.normal(size=(1, n))
        qp = QuadraticProgram(H, q, A_eq, [0.0], A_ub, b_ub)

        result = qp_solve(qp)
        reference = minimize(
            qp.objective,
            np.zeros(n),
            jac=lambda d: H @ d + q,
            constraints=[
                {"type": "ineq", "fun": lambda d: b_ub - A_ub @ d, "jac": lambda d: -A_ub},
                {"type": "eq", "fun": lambda d: A_eq @ d, "jac": lambda d: A_eq},
            ],
            method="SLSQP",
            options={"ftol": 1e-12, "maxiter": 500},
        )
        assert qp_kkt_residual(qp, result) <= 1e-8
        assert qp.objective(result.x) == pytest.approx(reference.fun, abs=1e-6)


def test_many_standard_form_lps_match_vertex_enumeration(rng):
    for _ in range(500):
        n = int(rng.integers(3, 7))
        m = int(rng.integers(1, 3))
        # positive rows keep {x >= 0 : Ax = b} bounded
        A = rng.uniform(0.5, 1.5, size=(m, n))
        b = A @ rng.uniform(0.1, 1.0, size=n)
        c = rng.normal(size=n)
        lp = LinearProgram(c, A, b, bounds=((0.0, None),) * n)

        result = lp_solve(lp)
        vertices = enumerate_vertices(A, b, range(n))
        assert result.optimal
        assert lp_kkt_residual(lp, result) <= 1e-8
        assert vertices.bounded and vertices.exhaustive
        assert result.objective == pytest.approx(min(float(c @ v) for v in vertices.vertices), abs=1e-8)


def _working_set_minimum(qp: QuadraticProgram) -> float:
    """Best feasible face minimizer over every subset of inequality rows."""
    n, m = qp.n, qp.A_ub.shape[0]
    best = np.inf
    for mask in range(2**m):
        rows = [i for i in range(m) if mask >> i & 1]
        A = np.vstack([qp.A_eq, qp.A_ub[rows]])
        if A.shape[0] > n:
            continue
        K = np.block([[qp.H, A.T], [A, np.zeros((A.shape[0], A.shape[0]))]])
        rhs = np.concatenate([-qp.q, qp.b_eq, qp.b_ub[rows]])
        d = np.linalg.solve(K, rhs)[:n]
        if np.all(qp.A_ub @ d <= qp.b_ub + 1e-9):
            best = min(best, qp.objective(d))
    return best


def test_many_qps_match_working_set_enumeration(rng):
    for _ in range(500):
        n = 3
        M = rng.normal(size=(n, n))
        qp = QuadraticProgram(
            M @ M.T + np.eye(n),
            rng.normal(size=n),
            rng.normal(size=(1, n)),
            [0.0],
            rng.normal(size=(4, n)),
            rng.uniform(0.1, 1.0, size=4),
        )
        result = qp_solve(qp)
        assert qp_kkt_residual(qp, result) <= 1e-8
        assert qp.objective(result.x) == pytest.approx(_working_set_minimum(qp), abs=1e-8)


def test_qp_with_dependent_equalities():
    qp = QuadraticProgram(np.eye(2), [-1.0, -1.0], [[1.0, 0.0], [2.0, 0.0]], [0.5, 1.0])
    result = qp_solve(qp)
    assert result.x == pytest.approx([0.5, 1.0])
    assert qp_kkt_residual(qp, result) <= 1e-10


def test_qp_infeasible_reports_row():
    qp = QuadraticProgram(np.eye(1), [0.0], A_ub=[[1.0], [-1.0]], b_ub=[-1.0, -1.0])
    with pytest.raises(InfeasibleProblemError) as err:
        qp_solve(qp)
    assert err.value.kind == "ineq"


def test_qp_indefinite_reduced_hessian():
    qp = QuadraticProgram(np.diag([1.0, -1.0]), [0.0, 0.0], A_ub=[[1.0, 0.0]], b_ub=[1.0])
    with pytest.raises(IndefiniteHessianError):
        qp_solve(qp)


def test_vertices_of_simplex_segment():
    # {z >= 0 : z1 + z2 = 1}
    result = enumerate_vertices([[1.0, 1.0]], [1.0], [0, 1])
    assert len(result) == 2
    assert result.bounded and result.exhaustive
    assert sorted(map(tuple, result.vertices)) == [(0.0, 1.0), (1.0, 0.0)]


def test_vertices_agree_with_lp_extremes(rng):
    A = rng.uniform(0.5, 1.5, size=(2, 4))
    b = np.array([1.0, 1.0])
    result = enumerate_vertices(A, b, range(4))
    assert len(result) >= 1
    for _ in range(5):
        c = rng.normal(size=4)
        lp = lp_solve(LinearProgram(c, A, b, bounds=((0.0, None),) * 4))
        best = min(float(c @ v) for v in result.vertices)
        assert lp.objective == pytest.approx(best, abs=1e-9)


def test_unbounded_polyhedron_flagged():
    result = enumerate_vertices([[1.0, -1.0]], [0.0], [0, 1])
    assert not result.bounded


def test_empty_polyhedron():
    result = enumerate_vertices([[1.0, 1.0]], [-1.0], [0, 1])
    assert len(result) == 0


def test_vertex_guard_and_sampling():
    A = np.ones((1, 6))
    with pytest.raises(VertexGuardError):
        enumerate_vertices(A, [1.0], range(6), guard=4)
    sampled = enumerate_vertices(A, [1.0], range(6), guard=4, sample=20, seed=1)
    assert not sampled.exhaustive
    assert 1 <= len(sampled) <= 6
