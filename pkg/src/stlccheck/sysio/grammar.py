"""Tokenizer and recursive-descent parser shared by polynomial and control expressions.

Grammar::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := ("-" | "+") unary | power
    power := atom ("^" unary_exponent)?
    atom  := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

In exact (polynomial) mode ``/`` is only accepted between two integer
literals, where it forms a rational literal ``p/q``; decimals and function
calls are rejected, and exponents must be nonnegative integer literals.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

__all__ = ["ParseError", "Token", "tokenize", "Parser"]


class ParseError(ValueError):
    """Syntax or semantic error, located by 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r"|(?P<ws>\s+)"
)


def tokenize(text: str, line: int = 1, column: int = 1) -> list[Token]:
    """Split ``text`` into tokens; positions are offset by ``line``/``column``."""
    tokens = []
    pos = 0
    cur_line, line_start = line, -(column - 1)
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", cur_line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), start=pos):
                if ch == "\n":
                    cur_line += 1
                    line_start = i + 1
        else:
            tokens.append(Token(kind, m.group(), cur_line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("end", "", cur_line, pos - line_start + 1))
    return tokens


class Parser:
    """Recursive-descent parser producing a small tuple AST.

    Node shapes: ``("num", value)``, ``("id", name)``, ``("neg", x)``,
    ``("add"|"sub"|"mul"|"div", a, b)``, ``("pow", base, exponent)``,
    ``("call", name, arg)``. Every node is wrapped as ``(node, token)`` so
    later stages can report positions.
    """

    def __init__(self, text: str, *, exact: bool, line: int = 1, column: int = 1):
        self.exact = exact
        self.tokens = tokenize(text, line, column)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.column)

    def _take(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _is(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self):
        if self.tok.kind == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self._take()
            node = ("add" if op.text == "+" else "sub", node, self.term()), op
        return node

    def term(self):
        node = self.unary()
        while self._is("*") or self._is("/"):
            op = self._take()
            if op.text == "/" and self.exact:
                raise self.error("division is only allowed inside rational literals p/q", op)
            node = ("mul" if op.text == "*" else "div", node, self.unary()), op
        return node

    def unary(self):
        if self._is("-") or self._is("+"):
            op = self._take()
            inner = self.unary()
            return (("neg", inner), op) if op.text == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self._is("^"):
            op = self._take()
            if self.exact:
                t = self.tok
                if t.kind != "num":
                    if self._is("-"):
                        raise self.error("negative exponent", t)
                    raise self.error("exponent must be a nonnegative integer literal", t)
                if not t.text.isdigit():
                    raise self.error("non-integer exponent", t)
                self._take()
                return ("pow", base, (("num", int(t.text)), t)), op
            return ("pow", base, self.unary()), op
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self._take()
            if self.exact:
                if not t.text.isdigit():
                    raise self.error("only integer and p/q rational literals are allowed", t)
                value = Fraction(int(t.text))
                if self._is("/"):
                    self._take()
                    d = self.tok
                    if d.kind != "num" or not d.text.isdigit():
                        raise self.error("rational literal needs an integer denominator", d)
                    self._take()
                    if int(d.text) == 0:
                        raise self.error("zero denominator", d)
                    value = Fraction(int(t.text), int(d.text))
                return ("num", value), t
            return ("num", float(t.text)), t
        if t.kind == "ident":
            self._take()
            if self._is("("):
                if self.exact:
                    raise self.error(f"function call {t.text}(...) not allowed in a polynomial", t)
                self._take()
                arg = self.expr()
                if not self._is(")"):
                    raise self.error("expected ')'")
                self._take()
                return ("call", t.text, arg), t
            return ("id", t.text), t
        if self._is("("):
            self._take()
            node = self.expr()
            if not self._is(")"):
                raise self.error("expected ')'")
            self._take()
            return node
        if t.kind == "end":
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected {t.text!r}")
