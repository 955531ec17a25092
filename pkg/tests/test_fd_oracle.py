import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ActiveSetChangeError, DimensionMismatchError, ResolveError
from src.model import parse_problem
from src.oracle import (
    OracleConfig,
    compare,
    fd_directional,
    fd_jacobian,
    fd_jacobian_async,
    fd_value_derivatives,
    resolve,
)


def test_resolve_polishes_barrier_solution(p2):
    solved = resolve(p2)
    assert solved.point.x == pytest.approx([0.5], abs=1e-10)
    assert solved.point.z == pytest.approx([0.5], abs=1e-10)
    assert solved.active == (0,)
    assert solved.value == pytest.approx(0.125)


def test_resolve_wraps_solver_failures():
    # strictly infeasible for every start
    nlp = parse_problem("vars x1\nparams p1\nminimize x1^2\nsubject_to\nineq: 1 - p1\nat p = [0]")
    with pytest.raises(ResolveError) as err:
        resolve(nlp)
    assert err.value.details["p"] == [0.0]


@pytest.mark.asyncio
async def test_fd_jacobian_async_on_regular_problem(p1):
    fd = await fd_jacobian_async(p1)
    assert fd.jac_x == pytest.approx(np.array([[0.5], [0.5]]), abs=1e-7)
    assert fd.jac_y == pytest.approx(np.array([[-0.5]]), abs=1e-7)
    assert fd.active == ()


def test_fd_jacobian_sync_wrapper(p2):
    fd = fd_jacobian(p2, [0.5])
    assert fd.jac_x == pytest.approx(np.array([[1.0]]), abs=1e-6)
    assert fd.jac_z == pytest.approx(np.array([[-1.0]]), abs=1e-6)
    assert fd.steps == pytest.approx([1e-4])


def test_fd_jacobian_refuses_stencil_across_kink(p2):
    with pytest.raises(ActiveSetChangeError) as err:
        fd_jacobian(p2, [1.0])
    assert err.value.details["base"] == [0]


def test_one_sided_quotients_see_both_branches(p2):
    up = fd_directional(p2, [1.0], [1.0])
    down = fd_directional(p2, [1.0], [-1.0])
    assert up.estimate == pytest.approx([0.0], abs=1e-6)
    assert down.estimate == pytest.approx([-1.0], abs=1e-6)
    assert up.quotients.shape == (len(up.steps), 1)


def test_zero_direction_needs_no_resolve(p2):
    fd = fd_directional(p2, [0.5], [0.0])
    assert fd.estimate == pytest.approx([0.0])
    assert fd.monotone


def test_direction_length_is_checked(p2):
    with pytest.raises(DimensionMismatchError):
        fd_directional(p2, [0.5], [1.0, 1.0])


def test_value_derivatives_on_p1(p1):
    fd = fd_value_derivatives(p1)
    assert fd.phi == pytest.approx(0.25, abs=1e-10)
    assert fd.gradient == pytest.approx([0.5], abs=1e-7)
    assert fd.hessian == pytest.approx(np.array([[0.5]]), abs=1e-3)


@pytest.mark.parametrize(
    "overrides",
    [
        {"one_sided_steps": (1e-4, 1e-3)},
        {"one_sided_steps": ()},
        {"r_schedule": (1e-1, -1e-2)},
        {"central_step": 0.0},
    ],
)
def test_oracle_config_validation(overrides):
    with pytest.raises(ValidationError):
        OracleConfig(**overrides)


def test_compare_reports_absolute_and_relative_gap():
    gap = compare([[1.0], [2.0]], [[1.0], [2.5]])
    assert gap["max_abs_error"] == pytest.approx(0.5)
    assert gap["max_rel_error"] == pytest.approx(0.2)
    with pytest.raises(DimensionMismatchError):
        compare([1.0], [1.0, 2.0])


def test_parameter_free_problem_has_zero_jacobian():
    nlp = parse_problem("vars x1 x2\nparams p1\nminimize (x1 - 1)^2 + x2^2\nat p = [3]")
    fd = fd_jacobian(nlp)
    assert fd.jac_x == pytest.approx(np.zeros((2, 1)), abs=1e-8)
