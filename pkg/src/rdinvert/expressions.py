"""Tiny arithmetic expression language for config-declared functions.

Grammar: +, -, *, /, ^ (right associative), unary minus, parentheses,
numeric literals, the constant pi, the functions sin/cos/exp/abs, and a
declared set of variable names.  Parsing is recursive descent; errors
carry the offending column so configs fail loudly and precisely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import ExpressionError

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
}

_CONSTANTS = {"pi": math.pi}


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^(),":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_exp = False
            while j < len(text):
                d = text[j]
                if d.isdigit() or d == ".":
                    j += 1
                elif d in "eE" and not seen_exp and j + 1 < len(text) and (
                    text[j + 1].isdigit() or text[j + 1] in "+-"
                ):
                    seen_exp = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError("malformed number", text, i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {c!r}", text, i)
    tokens.append(("end", None, len(text)))
    return tokens


@dataclass(frozen=True)
class Expression:
    """A parsed expression over the declared variables."""

    text: str
    variables: Tuple[str, ...]
    _program: tuple

    def __call__(self, **env):
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"missing variable binding {missing[0]!r}", self.text, 0)
        return _evaluate(self._program, env)

    @property
    def is_constant(self) -> bool:
        def scan(node) -> bool:
            kind = node[0]
            if kind == "var":
                return False
            if kind == "num":
                return True
            if kind == "neg":
                return scan(node[1])
            if kind == "call":
                return scan(node[2])
            return scan(node[1]) and scan(node[2])

        return scan(self._program)

    def constant_value(self) -> float:
        return float(_evaluate(self._program, {}))


def _evaluate(node, env: Dict[str, object]):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -_evaluate(node[1], env)
    if kind == "call":
        return _FUNCTIONS[node[1]](_evaluate(node[2], env))
    left = _evaluate(node[1], env)
    right = _evaluate(node[2], env)
    if kind == "+":
        return left + right
    if kind == "-":
        return left - right
    if kind == "*":
        return left * right
    if kind == "/":
        return left / right
    return np.power(left, right)


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ExpressionError(f"expected {kind!r}", self.text, tok[2])
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError("trailing input", self.text, tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = (op, node, self.factor())
        return node

    def factor(self):
        # unary minus binds looser than the power, so -x^2 = -(x^2)
        tok = self.peek()
        if tok[0] == "-":
            self.advance()
            return ("neg", self.factor())
        if tok[0] == "+":
            self.advance()
            return self.factor()
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            node = ("^", node, self.factor())
        return node

    def atom(self):
        tok = self.advance()
        if tok[0] == "num":
            return ("num", tok[1])
        if tok[0] == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok[0] == "name":
            name = tok[1]
            if name in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", name, arg)
            if name in _CONSTANTS:
                return ("num", _CONSTANTS[name])
            if name in self.variables:
                return ("var", name)
            raise ExpressionError(f"unknown name {name!r}", self.text, tok[2])
        raise ExpressionError("expected a value", self.text, tok[2])


def parse_expression(text: str, variables: Sequence[str] = ("x",)) -> Expression:
    """Parse ``text`` over the given variable names."""
    program = _Parser(text, variables).parse()
    return Expression(text=text, variables=tuple(variables), _program=program)
