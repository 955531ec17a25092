"""Forward-over-forward dual numbers and derivative bundles for ParametricNLP."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from src.errors import DimensionMismatchError, EvaluationDomainError
from src.model.expr import Expr, integer_exponent, to_text
from src.model.problem import ParametricNLP


class Dual:
    """Truncated first-order Taylor number ``real + eps * t``.

    ``real`` and ``eps`` may themselves be Duals, which nests forward mode
    over forward mode: an inner level carrying a gradient vector in ``eps``
    and an outer level carrying one Hessian column.
    """

    __slots__ = ("real", "eps")

    def __init__(self, real: Any, eps: Any):
        self.real = real
        self.eps = eps

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real + other.real, self.eps + other.eps)
        return Dual(self.real + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real - other.real, self.eps - other.eps)
        return Dual(self.real - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.real, -self.eps)

    def __neg__(self):
        return Dual(-self.real, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real * other.real, self.eps * other.real + self.real * other.eps)
        return Dual(self.real * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.real / other.real,
                (self.eps * other.real - self.real * other.eps) / (other.real * other.real),
            )
        return Dual(self.real / other, self.eps / other)

    def __rtruediv__(self, other):
        return Dual(other / self.real, -other * self.eps / (self.real * self.real))

    def __repr__(self):
        return f"Dual({self.real!r}, {self.eps!r})"


def primal(value: Any) -> float:
    while isinstance(value, Dual):
        value = value.real
    return float(value)


def d_sin(a):
    if isinstance(a, Dual):
        return Dual(d_sin(a.real), d_cos(a.real) * a.eps)
    return math.sin(a)


def d_cos(a):
    if isinstance(a, Dual):
        return Dual(d_cos(a.real), -d_sin(a.real) * a.eps)
    return math.cos(a)


def d_exp(a):
    if isinstance(a, Dual):
        e = d_exp(a.real)
        return Dual(e, e * a.eps)
    return math.exp(a)


def d_log(a):
    if isinstance(a, Dual):
        return Dual(d_log(a.real), a.eps / a.real)
    return math.log(a)


def d_sqrt(a):
    if isinstance(a, Dual):
        s = d_sqrt(a.real)
        return Dual(s, a.eps / (2.0 * s))
    return math.sqrt(a)


def d_powi(a, k: int):
    if k == 0:
        return 1.0
    if isinstance(a, Dual):
        return Dual(d_powi(a.real, k), k * d_powi(a.real, k - 1) * a.eps)
    return a**k


_UNARY = {"sin": d_sin, "cos": d_cos, "exp": d_exp, "log": d_log, "sqrt": d_sqrt}


class _Evaluator:
    """Evaluates an AST over floats or Duals, checking domains at each node."""

    def __init__(self, xs: Sequence[Any], ps: Sequence[Any], nlp: ParametricNLP):
        self.xs = xs
        self.ps = ps
        self.nlp = nlp

    def _fail(self, reason: str, node: Expr):
        raise EvaluationDomainError(reason, to_text(node, self.nlp.var_names, self.nlp.param_names))

    def __call__(self, node: Expr):
        if node.kind == "const":
            return node.value
        if node.kind == "var":
            return self.xs[node.index]
        if node.kind == "param":
            return self.ps[node.index]

        if node.kind == "unary":
            a = self(node.args[0])
            if node.op == "neg":
                return -a
            if node.op == "log" and primal(a) <= 0.0:
                self._fail("log of a non-positive argument", node)
            if node.op == "sqrt" and primal(a) <= 0.0:
                self._fail("sqrt of a non-positive argument", node)
            return _UNARY[node.op](a)

        if node.op == "pow":
            base = self(node.args[0])
            k = integer_exponent(node.args[1])
            if k is not None:
                if k < 0 and primal(base) == 0.0:
                    self._fail("division by zero", node)
                return d_powi(base, k)
            if primal(base) <= 0.0:
                self._fail("non-integer power of a non-positive base", node)
            return d_exp(self(node.args[1]) * d_log(base))

        a, b = self(node.args[0]), self(node.args[1])
        if node.op == "add":
            return a + b
        if node.op == "sub":
            return a - b
        if node.op == "mul":
            return a * b
        if primal(b) == 0.0:
            self._fail("division by zero", node)
        return a / b


def _check_point(nlp: ParametricNLP, x, p) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    p = np.asarray(p, dtype=float).reshape(-1)
    if x.size != nlp.n or p.size != nlp.ell:
        raise DimensionMismatchError(
            f"expected x of length {nlp.n} and p of length {nlp.ell}, got {x.size} and {p.size}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise DimensionMismatchError("x and p must be finite")
    return x, p


def eval_values(nlp: ParametricNLP, x, p) -> tuple[float, np.ndarray, np.ndarray]:
    """Plain float evaluation of (f, g, h)."""
    x, p = _check_point(nlp, x, p)
    evaluate = _Evaluator(list(x), list(p), nlp)
    f = float(evaluate(nlp.objective))
    g = np.array([evaluate(e) for e in nlp.equalities], dtype=float)
    h = np.array([evaluate(e) for e in nlp.inequalities], dtype=float)
    return f, g, h


@dataclass(frozen=True)
class DerivativeBundle:
    """Values, first and second derivatives of f, g, h jointly in (x, p).

    Joint arrays index the stacked vector w = (x, p); the ``*_x``/``*_p``
    and ``*_xx``/``*_xp``/``*_pp`` properties slice them.
    """

    n: int
    ell: int
    f: float
    g: np.ndarray
    h: np.ndarray
    grad_f: np.ndarray
    jac_g: np.ndarray
    jac_h: np.ndarray
    hess_f: np.ndarray
    hess_g: np.ndarray
    hess_h: np.ndarray

    @property
    def grad_x_f(self) -> np.ndarray:
        return self.grad_f[: self.n]

    @property
    def grad_p_f(self) -> np.ndarray:
        return self.grad_f[self.n :]

    @property
    def jac_x_g(self) -> np.ndarray:
        return self.jac_g[:, : self.n]

    @property
    def jac_p_g(self) -> np.ndarray:
        return self.jac_g[:, self.n :]

    @property
    def jac_x_h(self) -> np.ndarray:
        return self.jac_h[:, : self.n]

    @property
    def jac_p_h(self) -> np.ndarray:
        return self.jac_h[:, self.n :]

    @property
    def hess_xx_f(self) -> np.ndarray:
        return self.hess_f[: self.n, : self.n]

    @property
    def hess_xp_f(self) -> np.ndarray:
        return self.hess_f[: self.n, self.n :]

    @property
    def hess_pp_f(self) -> np.ndarray:
        return self.hess_f[self.n :, self.n :]

    @property
    def hess_xx_g(self) -> np.ndarray:
        return self.hess_g[:, : self.n, : self.n]

    @property
    def hess_xp_g(self) -> np.ndarray:
        return self.hess_g[:, : self.n, self.n :]

    @property
    def hess_pp_g(self) -> np.ndarray:
        return self.hess_g[:, self.n :, self.n :]

    @property
    def hess_xx_h(self) -> np.ndarray:
        return self.hess_h[:, : self.n, : self.n]

    @property
    def hess_xp_h(self) -> np.ndarray:
        return self.hess_h[:, : self.n, self.n :]

    @property
    def hess_pp_h(self) -> np.ndarray:
        return self.hess_h[:, self.n :, self.n :]

    def lagrangian_hessian(self, y, z) -> np.ndarray:
        """Joint (x, p) Hessian of L = f + y'g + z'h."""
        y = np.asarray(y, dtype=float).reshape(-1)
        z = np.asarray(z, dtype=float).reshape(-1)
        hess = self.hess_f.copy()
        if y.size:
            hess += np.tensordot(y, self.hess_g, axes=1)
        if z.size:
            hess += np.tensordot(z, self.hess_h, axes=1)
        return hess


def eval_derivatives(nlp: ParametricNLP, x, p) -> DerivativeBundle:
    """Evaluate every function of the problem with exact first and second derivatives.

    One pass per coordinate k of w = (x, p): the inner level seeds the full
    gradient, the outer level seeds direction e_k and yields Hessian column k.
    """
    x, p = _check_point(nlp, x, p)
    w = np.concatenate([x, p])
    size = w.size
    funcs = nlp.functions
    count = len(funcs)

    values = np.zeros(count)
    grads = np.zeros((count, size))
    hessians = np.zeros((count, size, size))
    eye = np.eye(size)

    for k in range(size):
        seeds = [
            Dual(Dual(float(w[i]), eye[i]), Dual(float(eye[k, i]), np.zeros(size)))
            for i in range(size)
        ]
        evaluate = _Evaluator(seeds[: nlp.n], seeds[nlp.n :], nlp)
        for j, expr in enumerate(funcs):
            result = evaluate(expr)
            if not isinstance(result, Dual):
                values[j] = float(result)
                continue
            values[j] = primal(result)
            inner, column = result.real, result.eps
            if isinstance(inner, Dual):
                grads[j] = inner.eps
            if isinstance(column, Dual):
                hessians[j, :, k] = column.eps

    if size == 0:
        values = np.array([float(_Evaluator([], [], nlp)(e)) for e in funcs])

    # exact symmetry: (a + b) * 0.5 is commutative in IEEE arithmetic
    hessians = 0.5 * (hessians + np.transpose(hessians, (0, 2, 1)))

    m_e = nlp.m_e
    return DerivativeBundle(
        n=nlp.n,
        ell=nlp.ell,
        f=float(values[0]),
        g=values[1 : 1 + m_e].copy(),
        h=values[1 + m_e :].copy(),
        grad_f=grads[0].copy(),
        jac_g=grads[1 : 1 + m_e].copy(),
        jac_h=grads[1 + m_e :].copy(),
        hess_f=hessians[0].copy(),
        hess_g=hessians[1 : 1 + m_e].copy(),
        hess_h=hessians[1 + m_e :].copy(),
    )


@dataclass(frozen=True)
class LagrangianDerivatives:
    grad_x: np.ndarray
    hess_xx: np.ndarray
    hess_xp: np.ndarray
    grad_p: np.ndarray
    hess_pp: np.ndarray

    @property
    def hess_px(self) -> np.ndarray:
        return self.hess_xp.T


def lagrangian_from_bundle(bundle: DerivativeBundle, y, z) -> LagrangianDerivatives:
    y = np.asarray(y, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if y.size != bundle.g.size or z.size != bundle.h.size:
        raise DimensionMismatchError(
            f"multipliers have lengths ({y.size}, {z.size}), expected ({bundle.g.size}, {bundle.h.size})"
        )
    n = bundle.n
    grad = bundle.grad_f + bundle.jac_g.T @ y + bundle.jac_h.T @ z
    hess = bundle.lagrangian_hessian(y, z)
    return LagrangianDerivatives(
        grad_x=grad[:n],
        hess_xx=hess[:n, :n],
        hess_xp=hess[:n, n:],
        grad_p=grad[n:],
        hess_pp=hess[n:, n:],
    )


def lagrangian_derivatives(nlp: ParametricNLP, x, y, z, p) -> LagrangianDerivatives:
    return lagrangian_from_bundle(eval_derivatives(nlp, x, p), y, z)
