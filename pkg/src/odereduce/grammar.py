"""Tokenizer and precedence-climbing parser for ODE text.

Grammar (explicit ``*`` required)::

    equation := expr ['=' expr]
    expr     := expr ('+'|'-') expr | expr ('*'|'/') expr | ('-'|'+') expr
              | expr '^' integer | func '(' expr ')' | '(' expr ')'
              | number | variable

``^`` is right-associative and binds tighter than unary minus.  Variables are
the independent name, the dependent name followed by up to four primes, or
``<dependent>^(n)`` for n >= 4.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import sympy as sp

from .kernel import jet, var

MAX_ORDER = 4

FUNCTIONS = {
    "exp": sp.exp,
    "ln": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
}

# (precedence, right-associative)
BINARY = {
    "+": (1, False),
    "-": (1, False),
    "*": (2, False),
    "/": (2, False),
    "^": (4, True),
}
UNARY_PREC = 3

_NUMBER = re.compile(r"\d+(?:\.\d*)?|\.\d+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*('*)")
_ALIAS = re.compile(r"\^\((\d+)\)")


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.message = message
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, deriv, op, lparen, rparen, eq, end
    text: str
    offset: int  # byte offset into the UTF-8 source
    order: int = 0


def tokenize(text: str, dependent: str = "y") -> list[Token]:
    tokens = []
    i = 0

    def boff(pos: int) -> int:
        return len(text[:pos].encode("utf-8"))

    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(Token("num", m.group(), boff(i)))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            alias = _ALIAS.match(text, m.end()) if word == dependent else None
            if alias and int(alias.group(1)) >= MAX_ORDER:
                tokens.append(Token("deriv", word + alias.group(), boff(i), int(alias.group(1))))
                i = alias.end()
            else:
                tokens.append(Token("ident", word, boff(i)))
                i = m.end()
            continue
        if c in BINARY:
            tokens.append(Token("op", c, boff(i)))
        elif c == "(":
            tokens.append(Token("lparen", c, boff(i)))
        elif c == ")":
            tokens.append(Token("rparen", c, boff(i)))
        elif c == "=":
            tokens.append(Token("eq", c, boff(i)))
        else:
            raise ParseError(f"unexpected character {c!r}", boff(i))
        i += 1
    tokens.append(Token("end", "", boff(len(text))))
    return tokens


class Parser:
    def __init__(
        self, text: str, dependent: str = "y", independent: str = "x", constants: tuple[str, ...] = ()
    ):
        self.dependent = dependent
        self.independent = independent
        self.constants = frozenset(constants)
        self.tokens = tokenize(text, dependent)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {kind}, found {found!r}", self.tok.offset)
        return self.advance()

    def equation(self) -> tuple[sp.Expr, sp.Expr]:
        lhs = self.expr(0)
        rhs = sp.Integer(0)
        if self.tok.kind == "eq":
            self.advance()
            rhs = self.expr(0)
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return lhs, rhs

    def expr(self, min_prec: int) -> sp.Expr:
        lhs = self.unary()
        while self.tok.kind == "op" and BINARY[self.tok.text][0] >= min_prec:
            op = self.advance()
            prec, right = BINARY[op.text]
            rhs = self.expr(prec if right else prec + 1)
            lhs = self.apply(op, lhs, rhs)
        return lhs

    def apply(self, op: Token, lhs: sp.Expr, rhs: sp.Expr) -> sp.Expr:
        if op.text == "+":
            return lhs + rhs
        if op.text == "-":
            return lhs - rhs
        if op.text == "*":
            return lhs * rhs
        if op.text == "/":
            return lhs / rhs
        if not rhs.is_Integer:
            raise ParseError("exponent must be an integer", op.offset)
        return lhs**rhs

    def unary(self) -> sp.Expr:
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = self.advance().text
            operand = self.expr(UNARY_PREC)
            return -operand if sign == "-" else operand
        return self.primary()

    def primary(self) -> sp.Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return sp.Rational(t.text)
        if t.kind == "lparen":
            self.advance()
            inner = self.expr(0)
            self.expect("rparen")
            return inner
        if t.kind == "deriv":
            self.advance()
            return self.derivative(t.order, t)
        if t.kind == "ident":
            self.advance()
            return self.identifier(t)
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.offset)

    def derivative(self, order: int, t: Token) -> sp.Expr:
        if order > MAX_ORDER:
            raise ParseError(f"derivative order {order} exceeds {MAX_ORDER}", t.offset)
        return jet(self.dependent, order)

    def identifier(self, t: Token) -> sp.Expr:
        word = t.text
        base = word.rstrip("'")
        if word in FUNCTIONS and self.tok.kind == "lparen":
            self.advance()
            arg = self.expr(0)
            self.expect("rparen")
            return FUNCTIONS[word](arg)
        if word == self.independent or word in self.constants:
            return var(word)
        if base == self.dependent:
            return self.derivative(len(word) - len(base), t)
        raise ParseError(f"unknown identifier {word!r}", t.offset)


def parse_equation(
    text: str, dependent: str = "y", independent: str = "x", constants: tuple[str, ...] = ()
) -> tuple[sp.Expr, sp.Expr]:
    """Parse ``lhs = rhs`` (or a bare expression, read as ``= 0``).

    ``constants`` names extra free symbols, e.g. integration constants.
    """
    return Parser(text, dependent, independent, constants).equation()
