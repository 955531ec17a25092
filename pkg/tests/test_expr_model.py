import numpy as np
import pytest

from src.errors import (
    DimensionMismatchError,
    EvaluationDomainError,
    ProblemSyntaxError,
    UndeclaredIdentifierError,
)
from src.model import (
    ParametricNLP,
    eval_derivatives,
    eval_values,
    lagrangian_derivatives,
    parse_problem,
    print_problem,
    var,
)
from src.model.expr import binary, const, is_affine_in_x, param, param_coefficients, unary
from tests.conftest import FIXTURES

SMOOTH = """
problem smooth
vars x1 x2
params a b
minimize exp(a*x1) + sin(x2)*x1^3 - log(x2 + b^2) + sqrt(x1*x2)
subject_to
eq: x1^2 + x2/b - a
ineq: cos(x1 - a) - x2^-2
at p = [0.3, 1.5]
start x = [0.8, 1.2]
"""


def _central_gradient(fun, w, step=1e-6):
    grad = np.zeros_like(w)
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = step
        grad[k] = (fun(w + e) - fun(w - e)) / (2 * step)
    return grad


def test_parse_p1_structure(p1):
    assert p1.name == "p1"
    assert (p1.n, p1.ell, p1.m_e, p1.m_i) == (2, 1, 1, 0)
    assert p1.var_names == ("x1", "x2")
    assert p1.p0 == (0.0,)
    assert p1.x0 == (0.5, 0.5)


def test_single_line_form_infers_names():
    nlp = parse_problem("minimize (x1 - p1)^2 + x2^2 s.t. eq: x1 + x2 - 1 ineq: -x2")
    assert (nlp.n, nlp.ell, nlp.m_e, nlp.m_i) == (2, 1, 1, 1)
    assert nlp.var_names == ("x1", "x2")
    assert nlp.param_names == ("p1",)


def test_print_parse_roundtrip_on_fixtures():
    for path in sorted(FIXTURES.glob("*.nlp")):
        nlp = parse_problem(path.read_text(), name=path.stem)
        text = print_problem(nlp)
        again = parse_problem(text)
        assert again == nlp, path.name
        assert print_problem(again) == text


def test_negative_constants_survive_print_and_parse():
    objective = binary(
        "add",
        binary("mul", const(-2.5), var(0)),
        binary("add", unary("neg", const(3.0)), binary("pow", const(-2.0), param(0))),
    )
    bound = binary("sub", var(0), const(-1.0))
    nlp = ParametricNLP(n=1, ell=1, objective=objective, inequalities=(bound,))
    again = parse_problem(print_problem(nlp))
    assert again.objective == objective
    assert again.inequalities == nlp.inequalities


def test_negative_literal_is_a_constant():
    nlp = parse_problem("vars x1\nminimize -2*x1 - -3^2")
    squared = unary("neg", binary("pow", const(3.0), const(2.0)))
    assert nlp.objective == binary("sub", binary("mul", const(-2.0), var(0)), squared)


def test_undeclared_identifier_reports_position():
    with pytest.raises(UndeclaredIdentifierError) as err:
        parse_problem("vars x1\nparams t\nminimize x1 + y")
    assert err.value.name == "y"
    assert err.value.line == 3


def test_inferred_variables_must_not_skip_indices():
    with pytest.raises(UndeclaredIdentifierError) as err:
        parse_problem("minimize x1 s.t. ineq: x9")
    assert err.value.name == "x9"
    assert err.value.line == 1
    assert err.value.column == 24


def test_inferred_indices_may_appear_out_of_order():
    nlp = parse_problem("minimize x3 + x1 s.t. eq: x2 - p2 ineq: p1")
    assert nlp.var_names == ("x1", "x2", "x3")
    assert nlp.param_names == ("p1", "p2")


@pytest.mark.parametrize(
    "text",
    [
        "vars x1\nminimize x1 +",
        "vars x1\nminimize (x1",
        "vars x1\neq: x1",
        "vars x1\nminimize x1 $ 2",
        "vars x1 x1\nminimize x1",
        "vars x1\nminimize x1\nat p = [1,]",
        "vars x1\nmaximize x1",
    ],
)
def test_syntax_errors(text):
    with pytest.raises(ProblemSyntaxError):
        parse_problem(text)


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        ParametricNLP(n=1, ell=0, objective=var(3))
    with pytest.raises(DimensionMismatchError):
        parse_problem("vars x1\nparams p1\nminimize x1*p1\nat p = [1, 2]")


def test_overdetermined_flag():
    nlp = parse_problem("vars x1\nminimize x1^2\neq: x1 - 1\neq: 2*x1 - 2")
    assert "overdetermined" in nlp.flags


def test_eval_values_p1(p1):
    f, g, h = eval_values(p1, [0.5, 0.5], [0.0])
    assert f == pytest.approx(0.25)
    assert g == pytest.approx([0.0])
    assert h.size == 0


def test_domain_errors():
    nlp = parse_problem("vars x1\nminimize log(x1) + 1/x1")
    with pytest.raises(EvaluationDomainError) as err:
        eval_values(nlp, [-1.0], [])
    assert "log" in err.value.subexpression
    with pytest.raises(EvaluationDomainError):
        eval_derivatives(nlp, [0.0], [])


def test_derivatives_match_finite_differences():
    nlp = parse_problem(SMOOTH)
    x, p = np.array(nlp.x0), np.array(nlp.p0)
    w = np.concatenate([x, p])
    bundle = eval_derivatives(nlp, x, p)

    def values(v):
        f, g, h = eval_values(nlp, v[:2], v[2:])
        return np.concatenate([[f], g, h])

    grads = np.vstack([bundle.grad_f, bundle.jac_g, bundle.jac_h])
    for j in range(3):
        fd = _central_gradient(lambda v: values(v)[j], w)
        assert np.allclose(grads[j], fd, atol=1e-6)

    hessians = np.concatenate([bundle.hess_f[None], bundle.hess_g, bundle.hess_h])
    for j in range(3):
        for k in range(w.size):
            e = np.zeros_like(w)
            e[k] = 1e-5
            column = (
                _gradient_row(nlp, w + e, j) - _gradient_row(nlp, w - e, j)
            ) / 2e-5
            assert np.allclose(hessians[j][:, k], column, atol=1e-5)
        assert np.array_equal(hessians[j], hessians[j].T)


def _gradient_row(nlp, w, j):
    bundle = eval_derivatives(nlp, w[: nlp.n], w[nlp.n :])
    return np.vstack([bundle.grad_f, bundle.jac_g, bundle.jac_h])[j]


def test_p1_lagrangian(p1):
    lag = lagrangian_derivatives(p1, [0.5, 0.5], [-0.5], [], [0.0])
    assert lag.grad_x == pytest.approx([0.0, 0.0])
    assert np.allclose(lag.hess_xx, np.eye(2))
    # d/dp of grad_x L = y * d/dp grad_x g = 0
    assert np.allclose(lag.hess_xp, np.zeros((2, 1)))
    assert lag.grad_p == pytest.approx([0.5])


def test_lagrangian_rejects_wrong_multiplier_length(p1):
    with pytest.raises(DimensionMismatchError):
        lagrangian_derivatives(p1, [0.5, 0.5], [], [], [0.0])


def test_affine_and_parameter_structure(c1_lp, c2_soc):
    assert all(is_affine_in_x(e) for _, e in c1_lp.labelled_expressions())
    assert not is_affine_in_x(c2_soc.inequalities[0])
    assert param_coefficients(c2_soc.equalities[0]) == {0: -1.0}
    assert param_coefficients(c2_soc.objective) is None


def _fd_gradient(fun, w):
    grad = np.zeros((np.atleast_1d(fun(w)).size, w.size))
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = 1e-5 * (1.0 + abs(w[k]))
        grad[:, k] = (np.atleast_1d(fun(w + e)) - np.atleast_1d(fun(w - e))) / (2 * e[k])
    return grad


@pytest.mark.parametrize("name", sorted(path.stem for path in FIXTURES.glob("*.nlp")))
def test_fixture_derivatives_match_finite_differences_on_random_draws(name, rng):
    nlp = parse_problem((FIXTURES / f"{name}.nlp").read_text(), name=name)
    size = nlp.n + nlp.ell

    def values(w):
        f, g, h = eval_values(nlp, w[: nlp.n], w[nlp.n :])
        return np.concatenate([[f], g, h])

    def gradients(w):
        bundle = eval_derivatives(nlp, w[: nlp.n], w[nlp.n :])
        return np.vstack([bundle.grad_f, bundle.jac_g, bundle.jac_h]).reshape(-1)

    for _ in range(100):
        w = rng.uniform(-2.0, 2.0, size=size)
        bundle = eval_derivatives(nlp, w[: nlp.n], w[nlp.n :])
        first = np.vstack([bundle.grad_f, bundle.jac_g, bundle.jac_h])
        second = np.concatenate([bundle.hess_f[None], bundle.hess_g, bundle.hess_h]).reshape(-1, size)
        assert np.allclose(first, _fd_gradient(values, w), rtol=1e-6, atol=1e-6)
        assert np.allclose(second, _fd_gradient(gradients, w), rtol=1e-6, atol=1e-6)
