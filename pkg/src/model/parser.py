"""Line-oriented problem text format: parser and canonical printer.

Grammar, one statement per line (``#`` starts a comment)::

    problem <name>
    vars x1 ... xn
    params p1 ... pl
    minimize <expr>
    subject_to            (or: s.t.)
    eq: <expr>            meaning <expr> = 0
    ineq: <expr>          meaning <expr> <= 0
    at p = [v, ...]
    start x = [v, ...]

``minimize <expr> s.t. eq: ... ineq: ...`` on a single line is accepted.
Without ``vars``/``params`` the identifiers ``x<k>``/``p<k>`` are inferred.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from src.errors import ProblemSyntaxError, UndeclaredIdentifierError
from src.model.expr import FUNCTIONS, Expr, binary, const, param, to_text, unary, var
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),\[\]=:])"
    r")"
)
_SPLIT = re.compile(r"\bs\.t\.|\bsubject_to\b|\b(?:ineq|eq)\s*:")
_INFERRED = re.compile(r"([xp])([1-9]\d*)$")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: int, offset: int = 0) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        match = _TOKEN.match(text, pos)
        if not match:
            raise ProblemSyntaxError(f"unexpected character '{text[pos]}'", line, offset + pos + 1)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), offset + match.start(kind) + 1))
        pos = match.end()
    return tokens


class _ExpressionParser:
    """Recursive descent over one expression; ``^`` binds tightest and is right-associative."""

    def __init__(self, tokens: list[Token], line: int, resolve):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.resolve = resolve

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> Token:
        token = self.peek()
        if token is None:
            raise ProblemSyntaxError("unexpected end of expression", self.line, self._end_column())
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.advance()
        if token.text != text:
            raise ProblemSyntaxError(f"expected '{text}', found '{token.text}'", self.line, token.column)
        return token

    def _end_column(self) -> int:
        if not self.tokens:
            return 1
        last = self.tokens[-1]
        return last.column + len(last.text)

    def parse(self) -> Expr:
        if not self.tokens:
            raise ProblemSyntaxError("empty expression", self.line, 1)
        expr = self.expression()
        token = self.peek()
        if token is not None:
            raise ProblemSyntaxError(f"unexpected '{token.text}'", self.line, token.column)
        return expr

    def expression(self) -> Expr:
        node = self.term()
        while (token := self.peek()) is not None and token.text in ("+", "-"):
            self.advance()
            node = binary("add" if token.text == "+" else "sub", node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while (token := self.peek()) is not None and token.text in ("*", "/"):
            self.advance()
            node = binary("mul" if token.text == "*" else "div", node, self.unary())
        return node

    def unary(self) -> Expr:
        token = self.peek()
        if token is not None and token.text == "-":
            self.advance()
            literal = self.peek()
            after = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
            if literal is not None and literal.kind == "number" and (after is None or after.text != "^"):
                # "-2" is the constant -2, the form the printer emits
                self.advance()
                return const(-float(literal.text))
            return unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        token = self.peek()
        if token is not None and token.text == "^":
            self.advance()
            return binary("pow", base, self.unary())
        return base

    def atom(self) -> Expr:
        token = self.advance()
        if token.kind == "number":
            return const(float(token.text))
        if token.kind == "ident":
            if token.text in FUNCTIONS:
                self.expect("(")
                inner = self.expression()
                self.expect(")")
                return unary(token.text, inner)
            return self.resolve(token, self.line)
        if token.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        raise ProblemSyntaxError(f"unexpected '{token.text}'", self.line, token.column)


def _logical_lines(text: str) -> list[tuple[int, int, str]]:
    """Split the file into (line number, column offset, statement) triples."""
    statements = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        starts = [0] + [m.start() for m in _SPLIT.finditer(content) if m.start() > 0]
        for begin, end in zip(starts, starts[1:] + [len(content)]):
            piece = content[begin:end]
            if piece.strip():
                statements.append((number, begin, piece))
    return statements


def _parse_vector(body: str, line: int, offset: int, symbol: str) -> tuple[float, ...]:
    tokens = tokenize(body, line, offset)
    texts = [t.text for t in tokens]
    if len(texts) < 4 or texts[0] != symbol or texts[1] != "=" or texts[2] != "[" or texts[-1] != "]":
        column = tokens[0].column if tokens else offset + 1
        raise ProblemSyntaxError(f"expected '{symbol} = [v, ...]'", line, column)

    values = []
    sign = 1.0
    expect_value = True
    for token in tokens[3:-1]:
        if expect_value and token.text == "-":
            sign = -sign
        elif expect_value and token.kind == "number":
            values.append(sign * float(token.text))
            sign = 1.0
            expect_value = False
        elif not expect_value and token.text == ",":
            expect_value = True
        else:
            raise ProblemSyntaxError(f"unexpected '{token.text}' in vector", line, token.column)
    if expect_value and values:
        raise ProblemSyntaxError("trailing ',' in vector", line, tokens[-1].column)
    return tuple(values)


class _ProblemBuilder:
    def __init__(self):
        self.name = "unnamed"
        self.var_names: list[str] | None = None
        self.param_names: list[str] | None = None
        self.objective: tuple[int, int, str] | None = None
        self.constraints: list[tuple[str, int, int, str]] = []
        self.p0: tuple[float, ...] | None = None
        self.x0: tuple[float, ...] | None = None
        # first occurrence of each inferred index: letter -> {index: (line, column)}
        self.inferred: dict[str, dict[int, tuple[int, int]]] = {"x": {}, "p": {}}

    def resolve(self, token: Token, line: int) -> Expr:
        name = token.text
        if self.var_names is not None and name in self.var_names:
            return var(self.var_names.index(name))
        if self.param_names is not None and name in self.param_names:
            return param(self.param_names.index(name))

        inferred = _INFERRED.match(name)
        if inferred:
            letter, index = inferred.group(1), int(inferred.group(2))
            declared = self.var_names if letter == "x" else self.param_names
            if declared is None:
                self.inferred[letter].setdefault(index, (line, token.column))
                return var(index - 1) if letter == "x" else param(index - 1)
        raise UndeclaredIdentifierError(name, line, token.column)

    def inferred_names(self, letter: str) -> list[str]:
        """Inferred names x1..xk; an index that skips over a missing one is undeclared."""
        seen = self.inferred[letter]
        for expected, index in enumerate(sorted(seen), start=1):
            if index != expected:
                line, column = seen[index]
                raise UndeclaredIdentifierError(f"{letter}{index}", line, column)
        return [f"{letter}{k}" for k in range(1, len(seen) + 1)]

    def expression(self, body: str, line: int, offset: int) -> Expr:
        return _ExpressionParser(tokenize(body, line, offset), line, self.resolve).parse()


def _names(body: str, line: int, offset: int) -> list[str]:
    names = []
    for token in tokenize(body, line, offset):
        if token.kind != "ident" or token.text in FUNCTIONS:
            raise ProblemSyntaxError(f"'{token.text}' is not a valid name", line, token.column)
        if token.text in names:
            raise ProblemSyntaxError(f"duplicate name '{token.text}'", line, token.column)
        names.append(token.text)
    return names


def parse_problem(text: str, name: str | None = None) -> ParametricNLP:
    """Parse problem text into a ParametricNLP."""
    builder = _ProblemBuilder()
    section = "header"

    for line, offset, statement in _logical_lines(text):
        stripped = statement.strip()
        lead = offset + len(statement) - len(statement.lstrip())
        keyword_match = re.match(r"(s\.t\.|[A-Za-z_]+\s*:?)", stripped)
        keyword = re.sub(r"\s", "", keyword_match.group(1)) if keyword_match else ""
        rest = stripped[len(keyword_match.group(1)) :] if keyword_match else stripped
        rest_offset = lead + (len(stripped) - len(rest))

        if keyword == "problem":
            builder.name = rest.strip() or builder.name
        elif keyword == "vars":
            builder.var_names = _names(rest, line, rest_offset)
        elif keyword == "params":
            builder.param_names = _names(rest, line, rest_offset)
        elif keyword == "minimize":
            if builder.objective is not None:
                raise ProblemSyntaxError("objective given twice", line, lead + 1)
            builder.objective = (line, rest_offset, rest)
            section = "objective"
        elif keyword in ("subject_to", "s.t."):
            if rest.strip():
                raise ProblemSyntaxError(f"unexpected text after '{keyword}'", line, rest_offset + 1)
            section = "constraints"
        elif keyword in ("eq:", "ineq:"):
            if section == "header":
                raise ProblemSyntaxError("constraint before 'minimize'", line, lead + 1)
            builder.constraints.append((keyword[:-1], line, rest_offset, rest))
        elif keyword == "at":
            builder.p0 = _parse_vector(rest, line, rest_offset, "p")
        elif keyword == "start":
            builder.x0 = _parse_vector(rest, line, rest_offset, "x")
        else:
            raise ProblemSyntaxError(f"unknown statement '{stripped.split()[0]}'", line, lead + 1)

    if builder.objective is None:
        raise ProblemSyntaxError("missing 'minimize' statement", 1, 1)

    objective = builder.expression(builder.objective[2], builder.objective[0], builder.objective[1])
    equalities, inequalities = [], []
    for kind, line, offset, body in builder.constraints:
        expr = builder.expression(body, line, offset)
        (equalities if kind == "eq" else inequalities).append(expr)

    var_names = builder.var_names if builder.var_names is not None else builder.inferred_names("x")
    param_names = builder.param_names if builder.param_names is not None else builder.inferred_names("p")

    nlp = ParametricNLP(
        n=len(var_names),
        ell=len(param_names),
        objective=objective,
        equalities=tuple(equalities),
        inequalities=tuple(inequalities),
        name=builder.name if builder.name != "unnamed" or name is None else name,
        var_names=tuple(var_names),
        param_names=tuple(param_names),
        p0=builder.p0,
        x0=builder.x0,
    )
    logger.debug(f"Parsed problem '{nlp.name}': n={nlp.n}, ell={nlp.ell}, m_e={nlp.m_e}, m_i={nlp.m_i}")
    return nlp


def load_problem(path: str | Path) -> ParametricNLP:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), name=path.stem)


def print_expr(expr: Expr, var_names, param_names) -> str:
    return to_text(expr, var_names, param_names)


def _vector(values) -> str:
    return "[" + ", ".join(repr(float(v)) for v in values) + "]"


def print_problem(nlp: ParametricNLP) -> str:
    """Canonical text that parse_problem reads back to the same AST."""
    lines = [
        f"problem {nlp.name}",
        "vars " + " ".join(nlp.var_names),
        "params " + " ".join(nlp.param_names),
        f"minimize {nlp.text(nlp.objective)}",
    ]
    if nlp.equalities or nlp.inequalities:
        lines.append("subject_to")
        lines += [f"eq: {nlp.text(e)}" for e in nlp.equalities]
        lines += [f"ineq: {nlp.text(e)}" for e in nlp.inequalities]
    if nlp.p0 is not None:
        lines.append(f"at p = {_vector(nlp.p0)}")
    if nlp.x0 is not None:
        lines.append(f"start x = {_vector(nlp.x0)}")
    return "\n".join(lines) + "\n"
