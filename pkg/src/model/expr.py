"""Expression trees over decision variables x and parameters p."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Expr:
    """Immutable AST node.

    ``kind`` is one of ``const``, ``var``, ``param``, ``unary`` or ``binary``.
    Constants carry ``value``; variables and parameters carry a zero-based
    ``index``; operator nodes carry ``op`` and their children in ``args``.
    """

    kind: str
    op: str | None = None
    value: float | None = None
    index: int | None = None
    args: tuple[Expr, ...] = ()

    def __add__(self, other: Expr | float) -> Expr:
        return binary("add", self, _lift(other))

    def __radd__(self, other: float) -> Expr:
        return binary("add", _lift(other), self)

    def __sub__(self, other: Expr | float) -> Expr:
        return binary("sub", self, _lift(other))

    def __rsub__(self, other: float) -> Expr:
        return binary("sub", _lift(other), self)

    def __mul__(self, other: Expr | float) -> Expr:
        return binary("mul", self, _lift(other))

    def __rmul__(self, other: float) -> Expr:
        return binary("mul", _lift(other), self)

    def __neg__(self) -> Expr:
        return unary("neg", self)


def const(value: float) -> Expr:
    return Expr("const", value=float(value))


def var(index: int) -> Expr:
    return Expr("var", index=index)


def param(index: int) -> Expr:
    return Expr("param", index=index)


def unary(op: str, arg: Expr) -> Expr:
    if op not in UNARY_OPS:
        raise ValueError(f"Unknown unary operator: {op}")
    return Expr("unary", op=op, args=(arg,))


def binary(op: str, left: Expr, right: Expr) -> Expr:
    if op not in BINARY_OPS:
        raise ValueError(f"Unknown binary operator: {op}")
    return Expr("binary", op=op, args=(left, right))


def _lift(value: Expr | float) -> Expr:
    return value if isinstance(value, Expr) else const(value)


def walk(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.args))


def max_indices(expr: Expr) -> tuple[int, int]:
    """Largest variable and parameter index referenced (-1 when absent)."""
    max_var, max_param = -1, -1
    for node in walk(expr):
        if node.kind == "var":
            max_var = max(max_var, node.index)
        elif node.kind == "param":
            max_param = max(max_param, node.index)
    return max_var, max_param


def depends_on_params(expr: Expr) -> bool:
    return any(node.kind == "param" for node in walk(expr))


def depends_on_vars(expr: Expr) -> bool:
    return any(node.kind == "var" for node in walk(expr))


def count_param_occurrences(expr: Expr) -> dict[int, int]:
    counts: dict[int, int] = {}
    for node in walk(expr):
        if node.kind == "param":
            counts[node.index] = counts.get(node.index, 0) + 1
    return counts


def constant_value(expr: Expr) -> float:
    """Fold a variable- and parameter-free subtree to a float."""
    if expr.kind == "const":
        return expr.value
    if expr.kind in ("var", "param"):
        raise ValueError("expression is not constant")
    if expr.kind == "unary":
        a = constant_value(expr.args[0])
        return {
            "neg": lambda v: -v,
            "sin": math.sin,
            "cos": math.cos,
            "exp": math.exp,
            "log": math.log,
            "sqrt": math.sqrt,
        }[expr.op](a)
    a, b = (constant_value(arg) for arg in expr.args)
    if expr.op == "add":
        return a + b
    if expr.op == "sub":
        return a - b
    if expr.op == "mul":
        return a * b
    if expr.op == "div":
        return a / b
    return a**b


def is_constant(expr: Expr) -> bool:
    return not (depends_on_vars(expr) or depends_on_params(expr))


def integer_exponent(expr: Expr) -> int | None:
    """Exponent of a pow node when it is a literal integer."""
    if expr.kind == "const" and float(expr.value).is_integer():
        return int(expr.value)
    if (
        expr.kind == "unary"
        and expr.op == "neg"
        and expr.args[0].kind == "const"
        and float(expr.args[0].value).is_integer()
    ):
        return -int(expr.args[0].value)
    return None


def x_degree(expr: Expr) -> float:
    """Polynomial degree in x (parameters count as constants); inf if not polynomial."""
    if expr.kind in ("const", "param"):
        return 0
    if expr.kind == "var":
        return 1
    if expr.kind == "unary":
        inner = x_degree(expr.args[0])
        if expr.op == "neg":
            return inner
        return 0 if inner == 0 else math.inf
    left, right = (x_degree(arg) for arg in expr.args)
    if expr.op in ("add", "sub"):
        return max(left, right)
    if expr.op == "mul":
        return left + right
    if expr.op == "div":
        return left if right == 0 else math.inf
    if left == 0 and right == 0:
        return 0
    exponent = integer_exponent(expr.args[1])
    if right == 0 and exponent is not None and exponent >= 0:
        return left * exponent
    return math.inf


def is_affine_in_x(expr: Expr) -> bool:
    return x_degree(expr) <= 1


def param_coefficients(expr: Expr) -> dict[int, float] | None:
    """Decompose ``expr = e(x) + sum_k c_k p_k``.

    Returns the coefficients ``c_k`` or ``None`` when a parameter enters
    non-additively (inside a function, multiplied by x, ...).
    """
    if not depends_on_params(expr):
        return {}
    if expr.kind == "param":
        return {expr.index: 1.0}
    if expr.kind == "unary":
        if expr.op != "neg":
            return None
        inner = param_coefficients(expr.args[0])
        return None if inner is None else {k: -c for k, c in inner.items()}
    if expr.kind != "binary":
        return {}

    left, right = expr.args
    if expr.op in ("add", "sub"):
        a, b = param_coefficients(left), param_coefficients(right)
        if a is None or b is None:
            return None
        sign = 1.0 if expr.op == "add" else -1.0
        merged = dict(a)
        for k, c in b.items():
            merged[k] = merged.get(k, 0.0) + sign * c
        return merged
    if expr.op == "mul":
        if is_constant(left):
            inner = param_coefficients(right)
            scale = constant_value(left)
        elif is_constant(right):
            inner = param_coefficients(left)
            scale = constant_value(right)
        else:
            return None
        return None if inner is None else {k: scale * c for k, c in inner.items()}
    if expr.op == "div" and is_constant(right):
        inner = param_coefficients(left)
        scale = 1.0 / constant_value(right)
        return None if inner is None else {k: scale * c for k, c in inner.items()}
    return None


def format_number(value: float) -> str:
    text = repr(float(value))
    return f"(-{repr(-float(value))})" if value < 0 else text


def to_text(expr: Expr, var_names: Sequence[str], param_names: Sequence[str]) -> str:
    """Canonical fully parenthesized text that the parser reads back unchanged."""
    if expr.kind == "const":
        return format_number(expr.value)
    if expr.kind == "var":
        return var_names[expr.index]
    if expr.kind == "param":
        return param_names[expr.index]
    if expr.kind == "unary":
        inner = to_text(expr.args[0], var_names, param_names)
        if expr.op == "neg":
            # keep neg(const v) apart from the literal -v
            return f"(-({inner}))" if expr.args[0].kind == "const" else f"(-{inner})"
        return f"{expr.op}({inner})"
    left, right = (to_text(arg, var_names, param_names) for arg in expr.args)
    return f"({left} {_SYMBOLS[expr.op]} {right})"
