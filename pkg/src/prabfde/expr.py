"""A small closed expression language for coefficients and forcing terms.

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := ("-" | "+") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := number | "t" | "pi" | func "(" expr ")" | "(" expr ")"
    func   := "exp" | "sin" | "cos"

There is no division, so every expression is defined wherever its powers
are.  Expressions evaluate elementwise on numpy arrays of ``t``.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .errors import ParseError

_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}
_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    col: int


def tokenize(src: str, line: int = None, col0: int = 1) -> List[Token]:
    out = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            bad = len(src) - len(src[pos:].lstrip())
            raise ParseError(f"unexpected character {src[bad]!r} in expression", line, col0 + bad)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), col0 + m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", col0 + len(src)))
    return out


@dataclass(frozen=True)
class Expr:
    """A parsed expression: callable on ``t``."""

    source: str
    fn: Callable
    uses_t: bool

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            return np.broadcast_to(np.asarray(self.fn(t), dtype=float), t.shape).copy()

    @property
    def is_constant(self) -> bool:
        return not self.uses_t

    def constant_value(self) -> float:
        return float(self.fn(np.zeros(())))


def _binary(op, f, g):
    return lambda t: op(f(t), g(t))


def _unary(op, f):
    return lambda t: op(f(t))


class _Parser:
    def __init__(self, tokens: List[Token], line):
        self.toks = tokens
        self.i = 0
        self.line = line

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, self.line, tok.col)

    def expect(self, text):
        tok = self.take()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text or 'end of expression'!r}", tok)

    def expr(self) -> Tuple[Callable, bool]:
        f, u = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            g, v = self.term()
            f = _binary(operator.add if op == "+" else operator.sub, f, g)
            u = u or v
        return f, u

    def term(self):
        f, u = self.unary()
        while self.peek().text == "*":
            self.take()
            g, v = self.unary()
            f = _binary(operator.mul, f, g)
            u = u or v
        return f, u

    def unary(self):
        if self.peek().text in ("-", "+"):
            op = self.take().text
            f, u = self.unary()
            return (_unary(operator.neg, f) if op == "-" else f), u
        return self.power()

    def power(self):
        f, u = self.atom()
        if self.peek().text in ("^", "**"):
            self.take()
            g, v = self.unary()
            return _binary(np.power, f, g), u or v
        return f, u

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            c = float(tok.text)
            return (lambda t: c), False
        if tok.kind == "name":
            if tok.text == "t":
                return (lambda t: t), True
            if tok.text == "pi":
                return (lambda t: math.pi), False
            if tok.text in _FUNCS:
                fn = _FUNCS[tok.text]
                self.expect("(")
                f, u = self.expr()
                self.expect(")")
                return _unary(fn, f), u
            raise self.error(f"unknown name {tok.text!r}", tok)
        if tok.text == "(":
            f, u = self.expr()
            self.expect(")")
            return f, u
        raise self.error(f"unexpected {tok.text or 'end of expression'!r}", tok)


def parse_expr(src: str, line: int = None, col: int = 1) -> Expr:
    """Parse ``src``; errors carry ``line`` and the column of the offending token."""
    toks = tokenize(src, line, col)
    p = _Parser(toks, line)
    if p.peek().kind == "end":
        raise ParseError("empty expression", line, col)
    fn, uses_t = p.expr()
    if p.peek().kind != "end":
        raise p.error(f"unexpected {p.peek().text!r} after expression")
    return Expr(src.strip(), fn, uses_t)
