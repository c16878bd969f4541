"""A small closed expression language for structural functions.

Structural equations are stored as parsed expression trees rather than
Python callables so that model definitions stay serialisable and loading a
model file never executes arbitrary code.  The language covers constants,
variable references, the arithmetic operators ``+ - * /``, unary minus and
the functions ``exp``, ``cos``, ``sin``, ``sigmoid`` and ``xor``.

Evaluation is vectorised: the environment maps names to numpy arrays (or
scalars) and the tree is evaluated with numpy broadcasting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = ["Expr", "parse_expr", "ExprError"]

ArrayLike = Union[float, np.ndarray]


class ExprError(ValueError):
    """Raised for syntax errors or unknown names in an expression."""


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str  # "neg"
    child: "Expr"

    def __str__(self) -> str:
        return f"-({self.child})"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    func: str  # exp | cos | sin | sigmoid | xor
    args: tuple["Expr", ...]

    def __str__(self) -> str:
        inner = ", ".join(str(a) for a in self.args)
        return f"{self.func}({inner})"


Expr = Union[Const, Var, Unary, Binary, Call]


def _sigmoid(x: ArrayLike) -> ArrayLike:
    # numerically stable logistic
    return 0.5 * (1.0 + np.tanh(np.asarray(x, dtype=float) / 2.0))


def _xor(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b)


_FUNCS = {
    "exp": (1, np.exp),
    "cos": (1, np.cos),
    "sin": (1, np.sin),
    "sigmoid": (1, _sigmoid),
    "xor": (2, _xor),
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[()+\-*/,]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExprError(f"unexpected character {text[pos]!r} at position {pos} in {text!r}")
        pos = match.end()
        for kind in ("num", "name", "op"):
            value = match.group(kind)
            if value is not None:
                tokens.append((kind, value))
                break
        if pos == len(text.rstrip()) and not text[pos:].strip():
            break
    return tokens


class _Parser:
    """Recursive-descent parser with the usual precedence for + - * /."""

    def __init__(self, tokens: list[tuple[str, str]], source: str):
        self.tokens = tokens
        self.source = source
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> tuple[str, str]:
        token = self.peek()
        if token is None:
            raise ExprError(f"unexpected end of expression in {self.source!r}")
        self.pos += 1
        return token

    def expect(self, op: str) -> None:
        token = self.advance()
        if token != ("op", op):
            raise ExprError(f"expected {op!r} but found {token[1]!r} in {self.source!r}")

    def parse(self) -> Expr:
        expr = self.sum()
        if self.peek() is not None:
            raise ExprError(f"trailing tokens after expression in {self.source!r}")
        return expr

    def sum(self) -> Expr:
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.advance()
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.advance()
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        token = self.advance()
        kind, value = token
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if self.peek() == ("op", "("):
                return self.call(value)
            return Var(value)
        if token == ("op", "-"):
            return Unary("neg", self.factor())
        if token == ("op", "("):
            node = self.sum()
            self.expect(")")
            return node
        raise ExprError(f"unexpected token {value!r} in {self.source!r}")

    def call(self, func: str) -> Expr:
        if func not in _FUNCS:
            raise ExprError(f"unknown function {func!r} in {self.source!r}")
        arity, _ = _FUNCS[func]
        self.expect("(")
        args = [self.sum()]
        while self.peek() == ("op", ","):
            self.advance()
            args.append(self.sum())
        self.expect(")")
        if len(args) != arity:
            raise ExprError(f"{func} takes {arity} argument(s), got {len(args)} in {self.source!r}")
        return Call(func, tuple(args))


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""

    tokens = _tokenize(text)
    if not tokens:
        raise ExprError("empty expression")
    return _Parser(tokens, text).parse()


def expr_names(expr: Expr) -> frozenset[str]:
    """All variable names referenced by ``expr``."""

    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Unary):
        return expr_names(expr.child)
    if isinstance(expr, Binary):
        return expr_names(expr.left) | expr_names(expr.right)
    if isinstance(expr, Call):
        out: frozenset[str] = frozenset()
        for arg in expr.args:
            out |= expr_names(arg)
        return out
    raise TypeError(f"not an expression node: {expr!r}")


def eval_expr(expr: Expr, env: Mapping[str, ArrayLike]) -> ArrayLike:
    """Evaluate ``expr`` under ``env`` with numpy broadcasting."""

    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise ExprError(f"unbound variable {expr.name!r}") from None
    if isinstance(expr, Unary):
        return -eval_expr(expr.child, env)
    if isinstance(expr, Binary):
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            return left / right
        raise ExprError(f"unknown operator {expr.op!r}")
    if isinstance(expr, Call):
        _, func = _FUNCS[expr.func]
        return func(*(eval_expr(a, env) for a in expr.args))
    raise TypeError(f"not an expression node: {expr!r}")
