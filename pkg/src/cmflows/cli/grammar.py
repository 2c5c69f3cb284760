"""
Hamiltonian text grammar::

    expr   := term (('+' | '-') term)*
    term   := [sign] [number '*'] trace ('*' trace)?
    trace  := 'tr' '(' word ')'
    word   := ('X' | 'Y')+

Numbers are decimal literals; a trailing ``j`` or ``i`` marks an imaginary
literal.  Those parse, so that callers can reject them with a meaningful
message rather than a syntax error.
"""
from __future__ import annotations

import re

from ..errors import ParseError
from ..tracepoly import TracePolynomial

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?([ji])?")
_WORD = re.compile(r"[XY]+")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, msg):
        raise ParseError(msg, self.text, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, s):
        self.skip()
        if not self.text.startswith(s, self.pos):
            self.fail(f"expected {s!r}")
        self.pos += len(s)

    def number(self):
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            return None
        self.pos = m.end()
        val = float(m.group(1) + (m.group(2) or ""))
        return complex(0, val) if m.group(3) else complex(val)

    def trace(self):
        self.expect("tr")
        self.expect("(")
        self.skip()
        m = _WORD.match(self.text, self.pos)
        if not m:
            self.fail("expected a word over {X, Y}")
        self.pos = m.end()
        self.expect(")")
        return m.group(0)

    def term(self, sign):
        coeff = complex(sign)
        if self.peek() in "+-":
            if self.text[self.pos] == "-":
                coeff = -coeff
            self.pos += 1
        c = self.number()
        if c is not None:
            coeff *= c
            self.expect("*")
        words = [self.trace()]
        if self.peek() == "*":
            self.pos += 1
            words.append(self.trace())
        return coeff, words

    def parse(self) -> TracePolynomial:
        if not self.text.strip():
            self.fail("empty Hamiltonian")
        items = [self.term(1.0)]
        while True:
            ch = self.peek()
            if ch == "":
                break
            if ch not in "+-":
                self.fail("expected '+', '-' or end of input")
            self.pos += 1
            items.append(self.term(1.0 if ch == "+" else -1.0))
        return TracePolynomial.from_terms(items)


def parse_hamiltonian(text: str) -> TracePolynomial:
    """Parse ``text``; raises :class:`ParseError` with the offending position."""
    return _Parser(text).parse()
