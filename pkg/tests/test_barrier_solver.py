import numpy as np
import pytest

from src.errors import InfeasibleStartError, MaxIterationsError, NotStationaryError
from src.model import parse_problem
from src.solvers import (
    barrier_kkt_residual,
    barrier_kkt_sensitivity,
    barrier_kkt_solve,
    barrier_sensitivity,
    barrier_sweep,
    find_interior_point,
    merit_value,
    newton_correct,
    sumt_solve,
)
from tests.conftest import point


def test_sumt_recovers_inequality_multiplier(p2):
    solution, states = sumt_solve(p2, [0.5])
    assert solution.x == pytest.approx([0.5], abs=1e-6)
    # z = r / (p - x) carries an O(r) error from the last stage
    assert solution.z == pytest.approx([0.5], abs=1e-5)
    assert [s.r for s in states] == sorted((s.r for s in states), reverse=True)


def test_sumt_recovers_equality_multiplier(p1):
    solution, _ = sumt_solve(p1)
    assert solution.x == pytest.approx([0.5, 0.5], abs=1e-6)
    assert solution.y == pytest.approx([-0.5], abs=1e-6)


def test_sumt_unconstrained_uses_single_stage():
    nlp = parse_problem("vars x1\nparams p1\nminimize (x1 - p1)^2\nat p = [3]")
    solution, states = sumt_solve(nlp)
    assert len(states) == 1
    assert solution.x == pytest.approx([3.0])


def test_barrier_sweep_converges_monotonically(p2):
    sweep = barrier_sweep(p2, [0.5])
    jacobians = [float(s.jac_x[0, 0]) for s in sweep]
    assert all(b >= a - 1e-12 for a, b in zip(jacobians, jacobians[1:]))
    assert jacobians[-1] == pytest.approx(1.0, abs=1e-5)
    assert sweep[-1].jac_z[0, 0] == pytest.approx(-1.0, abs=1e-4)


def test_barrier_jacobian_error_is_linear_in_r(p1):
    sweep = barrier_sweep(p1)
    r = np.array([s.details["r"] for s in sweep])
    errors = np.array([np.max(np.abs(s.jac_x - 0.5)) for s in sweep])
    assert np.all(np.diff(errors) < 0)
    slope = np.polyfit(np.log(r), np.log(errors), 1)[0]
    assert slope >= 0.9


def test_sumt_rejects_schedule_too_coarse_for_kkt_accuracy(p2):
    with pytest.raises(MaxIterationsError) as err:
        sumt_solve(p2, [0.5], r_schedule=[1e-1, 1e-2])
    assert err.value.details["r"] == 1e-2
    solution, _ = sumt_solve(p2, [0.5], r_schedule=[1e-1, 1e-2], strict=False)
    assert solution.x[0] < 0.5


def test_barrier_sensitivity_of_single_state(p1):
    _, states = sumt_solve(p1)
    sens = barrier_sensitivity(p1, states[-1])
    assert sens.jac_x == pytest.approx(np.array([[0.5], [0.5]]), abs=1e-6)
    assert sens.details["r"] == states[-1].r


def test_infeasible_start_runs_phase_one(p2):
    x = find_interior_point(p2, [0.5], [2.0])
    assert x[0] < 0.5
    solution, _ = sumt_solve(p2, [0.5], x0=[2.0])
    assert solution.x == pytest.approx([0.5], abs=1e-6)


def test_infeasible_start_without_phase_one(p2):
    with pytest.raises(InfeasibleStartError):
        sumt_solve(p2, [0.5], x0=[2.0], find_start=False)


def test_schedule_must_decrease(p2):
    with pytest.raises(ValueError):
        sumt_solve(p2, [0.5], r_schedule=[1e-3, 1e-2])


def test_merit_outside_interior_is_infinite(p2):
    assert merit_value(p2, [1.0], [0.5], 0.1) == np.inf
    assert np.isfinite(merit_value(p2, [0.0], [0.5], 0.1))


def test_barrier_kkt_system(p2):
    solved = barrier_kkt_solve(p2, [0.5], mu=1e-8)
    assert barrier_kkt_residual(p2, solved) <= 1e-10
    assert solved.x == pytest.approx([0.5], abs=1e-6)
    assert solved.s * solved.z == pytest.approx([1e-8], abs=1e-10)
    sens = barrier_kkt_sensitivity(p2, solved)
    assert sens.jac_x[0, 0] == pytest.approx(1.0, abs=1e-5)
    assert sens.details["mu"] == 1e-8


def test_barrier_kkt_sensitivity_rejects_unsolved_point(p2):
    solved = barrier_kkt_solve(p2, [0.5], mu=1e-8)
    shifted = type(solved)(solved.x + 0.1, solved.s, solved.y, solved.z, solved.mu, solved.p)
    with pytest.raises(NotStationaryError):
        barrier_kkt_sensitivity(p2, shifted)


def test_corrector_adds_violated_row(p2):
    result = newton_correct(p2, point([0.9], [], [0.0], [0.5]), active=())
    assert result.active == (0,)
    assert result.repaired
    assert result.point.x == pytest.approx([0.5])
    assert result.point.z == pytest.approx([0.5])


def test_corrector_releases_negative_multiplier(p2):
    result = newton_correct(p2, point([1.5], [], [0.1], [1.5]), active=(0,))
    assert result.active == ()
    assert result.point.x == pytest.approx([1.0])
    assert result.residual <= 1e-8


@pytest.mark.parametrize(
    "shift, kept, x",
    [(1e-5, (0,), 1.0 + 1e-5), (-1e-5, (1,), 1.0 - 2e-5)],
)
def test_corrector_drops_dependent_row_that_cannot_be_tight(p3_variant, shift, kept, x):
    result = newton_correct(p3_variant, point([1.0], [], [0.5, 0.5], [2.0, shift]))
    assert result.active == kept
    assert result.repaired
    assert "drop dependent" in result.repairs[0]
    assert result.point.x == pytest.approx([x], abs=1e-12)
    assert result.point.z[kept[0]] == pytest.approx(2.0 - x, abs=1e-10)
    assert result.residual <= 1e-8
