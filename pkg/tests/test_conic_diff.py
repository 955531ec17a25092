import json

import numpy as np
import pytest
from pydantic import ValidationError

from src.conic import (
    ConeSpec,
    ConicProblem,
    HSDPoint,
    conic_jacobian_b,
    conic_kkt_residual,
    conic_sensitivity,
    load_conic,
    project_cone,
    residual_map,
    skew_matrix,
    solve_polyhedral,
)
from src.errors import DimensionMismatchError, KernelError, KinkAtSolutionError, NotStationaryError
from src.oracle import resolve
from src.sensitivity import fiacco_jacobian
from tests.conftest import fixture_file


@pytest.fixture
def c1():
    return load_conic(fixture_file("c1.json"))


@pytest.fixture
def c2():
    return load_conic(fixture_file("c2.json"))


def _solution(model):
    return model.solution.x, model.solution.y, model.solution.s


def test_skew_matrix_is_skew(rng):
    Q = skew_matrix(rng.normal(size=(2, 3)), rng.normal(size=2), rng.normal(size=3))
    assert Q.shape == (6, 6)
    assert np.allclose(Q, -Q.T)


def test_soc_projection_and_jacobian(rng):
    spec = ConeSpec.of(("soc", 3))
    projected = project_cone(spec, [0.0, 2.0, 0.0])
    assert projected.u == pytest.approx([1.0, 1.0, 0.0])
    assert project_cone(spec, [-3.0, 1.0, 1.0]).u == pytest.approx([0.0, 0.0, 0.0])
    assert project_cone(spec, [3.0, 1.0, 1.0]).u == pytest.approx([3.0, 1.0, 1.0])

    z = np.array([0.3, 1.2, -0.7])
    J = project_cone(spec, z).jacobian
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1e-6
        column = (project_cone(spec, z + e).u - project_cone(spec, z - e).u) / 2e-6
        assert np.allclose(J[:, k], column, atol=1e-6)


def test_projection_kinks_are_flagged():
    spec = ConeSpec.of(("nonneg", 2), ("soc", 3))
    result = project_cone(spec, [0.0, 1.0, 1.0, 1.0, 0.0])
    assert not result.differentiable
    assert result.kinks == (0, 1)


def test_c1_residual_vanishes_at_solution(c1):
    prob, model = c1
    x, y, s = _solution(model)
    assert conic_kkt_residual(prob, x, y, s) == pytest.approx(0.0, abs=1e-14)
    point = HSDPoint.from_solution(prob, x, y, s)
    assert point.z == pytest.approx([-1.0, 1.0, 0.0, 1.0])
    assert residual_map(prob, point.z).R == pytest.approx(np.zeros(4), abs=1e-14)


def test_c1_sensitivity_in_b(c1):
    prob, model = c1
    sens = conic_sensitivity(prob, *_solution(model), db=[1.0])
    assert sens.dx == pytest.approx([0.0, 1.0], abs=1e-10)
    assert sens.dy == pytest.approx([0.0], abs=1e-10)
    assert conic_jacobian_b(prob, *_solution(model)) == pytest.approx(np.array([[0.0], [1.0]]), abs=1e-10)


def test_c1_polyhedral_solve_matches_file(c1):
    prob, model = c1
    x, y, s = solve_polyhedral(prob)
    assert x == pytest.approx(model.solution.x)
    assert y == pytest.approx(model.solution.y)
    assert s == pytest.approx(model.solution.s)


def test_c2_residual_and_sensitivities(c2):
    prob, model = c2
    x, y, s = _solution(model)
    point = HSDPoint.from_solution(prob, x, y, s)
    assert residual_map(prob, point.z).R == pytest.approx(np.zeros(5), abs=1e-12)

    in_b = conic_sensitivity(prob, x, y, s, db=model.perturbation.db)
    assert in_b.dx == pytest.approx([1.0, 1.0, 0.0], abs=1e-9)
    in_c = conic_sensitivity(prob, x, y, s, dc=[0.0, 0.0, 1.0])
    assert in_c.dx == pytest.approx([0.0, 0.0, -1.0], abs=1e-9)


def test_c2_agrees_with_nlp_form(c2, c2_soc, c2_soc_point):
    prob, model = c2
    x, y, s = _solution(model)
    nlp = fiacco_jacobian(c2_soc, c2_soc_point).jac_x
    assert conic_sensitivity(prob, x, y, s, db=[1.0]).dx == pytest.approx(nlp[:, 0], abs=1e-8)
    assert conic_sensitivity(prob, x, y, s, dc=[0.0, 0.0, 1.0]).dx == pytest.approx(nlp[:, 1], abs=1e-8)


def test_c2_nlp_form_resolves_to_file_solution(c2, c2_soc):
    _, model = c2
    solved = resolve(c2_soc)
    assert solved.point.x == pytest.approx(model.solution.x, abs=1e-6)


def test_second_order_cone_needs_supplied_solution(c2):
    prob, _ = c2
    with pytest.raises(KernelError):
        solve_polyhedral(prob)


def test_non_optimal_solution_is_rejected(c1):
    prob, _ = c1
    with pytest.raises(NotStationaryError):
        conic_sensitivity(prob, [1.0, 0.0], [0.0], [1.0, 0.0], db=[1.0])


def test_complementary_zero_pair_is_a_kink():
    prob = ConicProblem([[1.0, 1.0]], [1.0], [1.0, 1.0], ConeSpec.of(("nonneg", 2)))
    with pytest.raises(KinkAtSolutionError) as err:
        conic_sensitivity(prob, [0.0, 1.0], [1.0], [0.0, 0.0], db=[1.0])
    assert err.value.blocks == [0]


def test_perturbation_shapes_are_checked(c1):
    prob, model = c1
    with pytest.raises(DimensionMismatchError):
        conic_sensitivity(prob, *_solution(model), db=[1.0, 2.0])


def test_loader_rejects_unknown_cone(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"A": [[1.0]], "b": [1.0], "c": [1.0], "cones": [{"kind": "psd", "dim": 1}]}))
    with pytest.raises(ValidationError):
        load_conic(path)


def test_loader_checks_dimensions(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({"A": [[1.0, 1.0]], "b": [1.0], "c": [1.0, 0.0], "cones": [{"kind": "nonneg", "dim": 3}]}))
    with pytest.raises(DimensionMismatchError):
        load_conic(path)
