import numpy as np
import pytest

from src.analysis import check_cq
from src.errors import NonSquareBasisError, NotAnLPError, RegularityNotCertifiedError
from src.oracle import fd_jacobian, resolve
from src.sensitivity import (
    Regime,
    adjoint_sensitivity,
    build_fiacco_system,
    fiacco_jacobian,
    forward_sensitivity,
    lex_leq,
    lmin,
    lmmin,
    lp_basis_sensitivity,
)


def test_fiacco_matches_closed_form_on_p1(p1, p1_point):
    sens = fiacco_jacobian(p1, p1_point)
    assert sens.regime is Regime.FIACCO
    assert np.allclose(sens.jac_x, [[0.5], [0.5]])
    assert np.allclose(sens.jac_y, [[-0.5]])
    assert sens.jac_z.shape == (0, 1)


def test_fiacco_inactive_rows_are_exact_zeros(p4):
    solved = resolve(p4)
    sens = fiacco_jacobian(p4, solved.point)
    assert solved.active == ()
    assert np.all(sens.jac_z == 0.0)


def test_fiacco_agrees_with_fd_oracle(p4):
    solved = resolve(p4)
    sens = fiacco_jacobian(p4, solved.point)
    fd = fd_jacobian(p4)
    assert np.allclose(sens.jac_x, fd.jac_x, atol=1e-5)
    assert np.allclose(sens.jac_y, fd.jac_y, atol=1e-5)


def test_fiacco_on_p2_regular_branch(p2, p2_point):
    sens = fiacco_jacobian(p2, p2_point)
    assert np.allclose(sens.jac_x, [[1.0]])
    assert np.allclose(sens.jac_z, [[-1.0]])


def test_fiacco_refuses_weakly_active_point(p2, p2_kink):
    with pytest.raises(RegularityNotCertifiedError) as err:
        fiacco_jacobian(p2, p2_kink)
    assert "SCS" in err.value.failed


def test_fiacco_refuses_dependent_gradients(p3, p3_point):
    with pytest.raises(RegularityNotCertifiedError) as err:
        fiacco_jacobian(p3, p3_point)
    assert "LICQ" in err.value.failed


def test_forward_and_adjoint_are_consistent(p4, rng):
    solved = resolve(p4)
    cq = check_cq(p4, solved.point)
    system = build_fiacco_system(p4, solved.point, cq.active.active)
    sens = fiacco_jacobian(p4, solved.point, cq)

    u = rng.normal(size=p4.ell)
    v = rng.normal(size=system.size)
    forward = forward_sensitivity(system, u)
    dx, dy, _ = system.expand(forward)
    assert np.allclose(dx, sens.jac_x @ u)
    assert np.allclose(dy, sens.jac_y @ u)
    assert forward @ v == pytest.approx(u @ adjoint_sensitivity(system, v))


def test_lp_basis_on_c1(c1_lp, c1_lp_point):
    sens = lp_basis_sensitivity(c1_lp, c1_lp_point)
    assert np.allclose(sens.jac_x, [[0.0], [1.0]])
    assert np.allclose(sens.jac_y, 0.0)
    assert np.allclose(sens.jac_z, 0.0)
    assert sens.details["basis"].shape == (2, 2)

    fiacco = fiacco_jacobian(c1_lp, c1_lp_point)
    assert np.allclose(fiacco.jac_x, sens.jac_x)


def test_lp_basis_rejects_nonlinear_problem(p1, p1_point):
    with pytest.raises(NotAnLPError) as err:
        lp_basis_sensitivity(p1, p1_point)
    assert err.value.details["functions"] == ["objective"]


def test_lp_basis_needs_square_basis(c1_lp, c1_lp_point):
    with pytest.raises(NonSquareBasisError):
        lp_basis_sensitivity(c1_lp, c1_lp_point, basis=np.eye(3))


def test_lexicographic_helpers():
    assert lex_leq([1.0, 5.0], [1.0, 6.0])
    assert lex_leq([1.0, 2.0], [1.0, 2.0])
    assert not lex_leq([2.0, 0.0], [1.0, 9.0])
    assert np.array_equal(lmin([0.0, 3.0], [0.0, -1.0]), [0.0, -1.0])
    rows = lmmin([[1.0, 0.0], [0.0, 2.0]], [[1.0, -1.0], [1.0, 0.0]])
    assert np.array_equal(rows, [[1.0, -1.0], [0.0, 2.0]])
