import numpy as np
import pytest

from src.analysis import check_cq
from src.errors import DimensionMismatchError
from src.oracle import resolve
from src.path import HomotopySchedule, choose_regime, follow_path, taylor_update
from src.sensitivity import Regime
from tests.conftest import point


def test_schedule_perturbations_sum_to_span():
    schedule = HomotopySchedule([0.5], [1.5], (0.0, 0.2, 0.7, 1.0))
    steps = schedule.perturbations()
    assert len(steps) == schedule.steps == 3
    assert sum(steps) == pytest.approx([1.0])
    assert schedule.parameter(0.5) == pytest.approx([1.0])


@pytest.mark.parametrize("breakpoints", [(0.0,), (0.1, 1.0), (0.0, 0.5, 0.5, 1.0), (0.0, 0.9)])
def test_schedule_rejects_bad_breakpoints(breakpoints):
    with pytest.raises(ValueError):
        HomotopySchedule([0.0], [1.0], breakpoints)


def test_schedule_endpoints_must_match():
    with pytest.raises(DimensionMismatchError):
        HomotopySchedule([0.0], [1.0, 2.0], (0.0, 1.0))


def test_regime_choice(p1, p1_point, p2, p2_kink, p3, p3_point):
    assert choose_regime(check_cq(p1, p1_point)) is Regime.FIACCO
    assert choose_regime(check_cq(p2, p2_kink)) is Regime.DIRECTIONAL
    assert choose_regime(check_cq(p3, p3_point, crcq=False)) is Regime.DEGENERATE


def test_taylor_update_on_regular_point(p2, p2_point):
    prediction = taylor_update(p2, p2_point, [0.25])
    assert prediction.regime is Regime.FIACCO
    assert prediction.point.x == pytest.approx([0.75])
    assert prediction.point.z == pytest.approx([0.25])
    assert prediction.point.p == pytest.approx([0.75])


def test_taylor_update_with_zero_step(p2, p2_point):
    prediction = taylor_update(p2, p2_point, [0.0])
    assert prediction.regime is None
    assert prediction.point is p2_point


def test_path_across_kink_records_active_set_change(p2, p2_point):
    schedule = HomotopySchedule.uniform([0.5], [1.5], 5)
    trace = follow_path(p2, p2_point, schedule)
    assert trace.completed
    assert len(trace.steps) == 6

    changes = trace.active_set_changes()
    assert len(changes) == 1
    t_before, t_after, added, removed = changes[0]
    # p = 0.5 + t crosses the kink p = 1 at t = 0.5
    assert (t_before, t_after) == pytest.approx((0.4, 0.6))
    assert added == ()
    assert removed == (0,)

    for step in trace.steps:
        assert step.point.x == pytest.approx([min(step.point.p[0], 1.0)], abs=1e-8)
    assert trace.final.x == pytest.approx([1.0], abs=1e-8)
    assert trace.final.z == pytest.approx([0.0], abs=1e-8)


def test_path_landing_on_kink(p2, p2_point):
    trace = follow_path(p2, p2_point, HomotopySchedule.uniform([0.5], [1.5], 4))
    assert trace.completed
    assert trace.steps[2].point.x == pytest.approx([1.0], abs=1e-8)
    assert trace.steps[3].regime == Regime.DIRECTIONAL.value
    assert trace.final.x == pytest.approx([1.0], abs=1e-8)


def test_path_on_regular_problem_is_exact(p1, p1_point):
    trace = follow_path(p1, p1_point, HomotopySchedule.uniform([0.0], [1.0], 2))
    assert trace.active_set_changes() == []
    assert trace.final.x == pytest.approx([1.0, 1.0])
    assert all(step.predictor_error <= 1e-10 for step in trace.steps)


def test_adaptive_path_matches_uniform(p2, p2_point):
    schedule = HomotopySchedule.uniform([0.5], [1.5], 5)
    adaptive = follow_path(p2, p2_point, schedule, adaptive=True)
    assert adaptive.completed
    assert adaptive.final.x == pytest.approx([1.0], abs=1e-8)
    assert adaptive.schedule.steps >= schedule.steps


def test_start_must_sit_at_schedule_origin(p2):
    with pytest.raises(DimensionMismatchError):
        follow_path(p2, point([0.5], [], [0.5], [0.5]), HomotopySchedule.uniform([0.7], [1.5], 2))


def test_step_length_is_checked(p2, p2_point):
    with pytest.raises(DimensionMismatchError):
        taylor_update(p2, p2_point, np.zeros(2))


def test_taylor_update_is_exact_on_affine_path(p1, p1_point):
    prediction = taylor_update(p1, p1_point, [0.2])
    assert prediction.point.x == pytest.approx([0.6, 0.6])
    assert prediction.point.y == pytest.approx([-0.6])


@pytest.mark.parametrize(
    "name, start, end",
    [("p2", [0.5], [1.5]), ("p4", [0.0, 1.0], [0.5, 1.5])],
)
def test_doubling_steps_never_worsens_endpoint(name, start, end, request):
    nlp = request.getfixturevalue(name)
    origin = resolve(nlp, start).point
    target = resolve(nlp, end).point.x
    errors = []
    for steps in (2, 4, 8, 16):
        trace = follow_path(nlp, origin, HomotopySchedule.uniform(start, end, steps))
        assert trace.completed
        errors.append(float(np.max(np.abs(trace.final.x - target))))
    assert errors[-1] <= 1e-6
    assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))
