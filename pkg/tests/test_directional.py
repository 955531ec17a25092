import numpy as np
import pytest

from src.analysis import check_cq
from src.errors import DimensionMismatchError, RegularityNotCertifiedError
from src.oracle import fd_directional, resolve
from src.sensitivity import (
    Regime,
    degenerate_directional,
    dempe_lp,
    directional_qp,
    fiacco_jacobian,
    ld_derivative,
)


@pytest.mark.parametrize("h, expected_dx, expected_dz", [(1.0, 0.0, 0.0), (-1.0, -1.0, 1.0)])
def test_directional_qp_at_kink(p2, p2_kink, h, expected_dx, expected_dz):
    derivative = directional_qp(p2, p2_kink, [h])
    assert derivative.regime is Regime.DIRECTIONAL
    assert derivative.dx == pytest.approx([expected_dx], abs=1e-10)
    assert derivative.dz == pytest.approx([expected_dz], abs=1e-10)


def test_directional_qp_is_positively_homogeneous(p2, p2_kink):
    once = directional_qp(p2, p2_kink, [-1.0]).dx
    twice = directional_qp(p2, p2_kink, [-2.0]).dx
    assert twice == pytest.approx(2.0 * once)


def test_directional_qp_matches_one_sided_differences(p2):
    fd = fd_directional(p2, [1.0], [-1.0])
    assert fd.estimate == pytest.approx([-1.0], abs=1e-6)
    assert fd.monotone


def test_directional_qp_requires_licq(p3, p3_point):
    with pytest.raises(RegularityNotCertifiedError):
        directional_qp(p3, p3_point, [1.0])


def test_direction_length_is_checked(p2, p2_kink):
    with pytest.raises(DimensionMismatchError):
        directional_qp(p2, p2_kink, [1.0, 0.0])


@pytest.mark.parametrize("h", [1.0, -1.0])
def test_degenerate_directional_on_duplicated_constraint(p3, p3_point, h):
    derivative = degenerate_directional(p3, p3_point, [h])
    assert derivative.regime is Regime.DEGENERATE
    assert derivative.dx == pytest.approx([0.0], abs=1e-10)
    assert derivative.dy is None and derivative.dz is None


def test_dempe_lp_ties_keep_every_vertex(p3, p3_point):
    cq = check_cq(p3, p3_point)
    selection = dempe_lp(p3, p3_point, cq.polytope, [1.0])
    assert len(selection.vertices) == 2
    assert selection.value == pytest.approx(0.0)


@pytest.mark.parametrize(
    "h, vertex, expected_dx",
    [((0.0, 1.0), (1.0, 0.0), 1.0), ((0.0, -1.0), (0.0, 1.0), -2.0)],
)
def test_dempe_lp_selects_direction_dependent_vertex(p3_variant, p3_variant_point, h, vertex, expected_dx):
    cq = check_cq(p3_variant, p3_variant_point)
    selection = dempe_lp(p3_variant, p3_variant_point, cq.polytope, h)
    assert len(selection.vertices) == 1
    _, z = selection.vertices[0]
    assert z == pytest.approx(vertex)

    derivative = degenerate_directional(p3_variant, p3_variant_point, h, cq)
    assert derivative.dx == pytest.approx([expected_dx], abs=1e-9)
    assert derivative.vertex[1] == pytest.approx(vertex)


def test_degenerate_directional_matches_resolves(p3_variant, p3_variant_point):
    fd = fd_directional(p3_variant, [2.0, 0.0], [0.0, -1.0])
    derivative = degenerate_directional(p3_variant, p3_variant_point, [0.0, -1.0])
    assert fd.estimate == pytest.approx(derivative.dx, abs=1e-5)


def test_ld_derivative_resolves_kink(p2, p2_kink):
    ld = ld_derivative(p2, p2_kink, [[-1.0, 1.0]])
    assert ld.X == pytest.approx(np.array([[-1.0, 1.0]]), abs=1e-10)
    assert ld.stages[0].zero == (0,)
    assert ld.stages[1].plus == (0,)
    assert ld.stages[1].zero == ()


def test_ld_derivative_first_column_is_directional(p2, p2_kink):
    ld = ld_derivative(p2, p2_kink, [[1.0, -1.0]])
    assert ld.X[0, 0] == pytest.approx(directional_qp(p2, p2_kink, [1.0]).dx[0], abs=1e-10)


def test_ld_derivative_on_regular_point_is_linear(p1, p1_point):
    ld = ld_derivative(p1, p1_point, [[1.0, 2.0]])
    assert ld.X == pytest.approx(np.array([[0.5, 1.0], [0.5, 1.0]]))
    assert ld.Y == pytest.approx(np.array([[-0.5, -1.0]]))


@pytest.mark.parametrize("name", ["p1", "p2", "c2_soc", "p4"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_ld_derivative_collapses_to_jacobian_on_smooth_points(name, k, request, rng):
    nlp = request.getfixturevalue(name)
    at = resolve(nlp).point
    jac_x = fiacco_jacobian(nlp, at).jac_x
    for _ in range(5):
        R = rng.normal(size=(nlp.ell, k))
        ld = ld_derivative(nlp, at, R)
        assert np.allclose(ld.X, jac_x @ R, atol=1e-7)
        assert np.allclose(ld.X[:, 0], directional_qp(nlp, at, R[:, 0]).dx, atol=1e-10)
