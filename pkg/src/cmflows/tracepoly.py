"""
Polynomials in traces of words in two matrices.

A word is a string over ``{"X", "Y"}``; ``tr(W)`` is invariant under cyclic
rotation, so words are stored as their lexicographically smallest rotation.
A monomial is a sorted tuple of words (a product of traces), and a
:class:`TracePolynomial` maps monomials to complex coefficients.

The empty word stands for ``tr(I) = n``; it only appears as the output of
brackets and is resolved when evaluating at a point of known size.
"""
from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

ALPHABET = ("X", "Y")
COEFF_EPS = 1e-14


@lru_cache(maxsize=None)
def canonical_word(word: str) -> str:
    if any(c not in ALPHABET for c in word):
        raise ValueError(f"word {word!r} has letters outside {{X, Y}}")
    if not word:
        return word
    return min(word[i:] + word[:i] for i in range(len(word)))


def _canonical_monomial(words: Iterable[str]) -> tuple:
    return tuple(sorted(canonical_word(w) for w in words))


def bidegree(word: str) -> tuple[int, int]:
    return word.count("X"), word.count("Y")


class TracePolynomial:
    """Finite sum ``sum_m c_m prod_{W in m} tr(W)``.

    >>> H = TracePolynomial.from_terms([(2.0, ["XXY"]), (1.0, ["X", "X"])])
    >>> str(H)
    '1*tr(X)*tr(X) + 2*tr(XXY)'
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, complex] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = complex(c)
            if abs(c) > COEFF_EPS:
                clean[mono] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def from_terms(cls, items) -> "TracePolynomial":
        """``items``: iterable of ``(coefficient, [word, ...])``; an empty word list is a constant."""
        acc = defaultdict(complex)
        for c, words in items:
            if isinstance(words, str):
                words = [words]
            acc[_canonical_monomial(words)] += c
        return cls(acc)

    @classmethod
    def trace(cls, word: str, coeff=1.0) -> "TracePolynomial":
        return cls.from_terms([(coeff, [word])])

    @classmethod
    def zero(cls) -> "TracePolynomial":
        return cls({})

    # algebra -----------------------------------------------------------
    def __add__(self, other):
        acc = defaultdict(complex, self.terms)
        for m, c in other.terms.items():
            acc[m] += c
        return TracePolynomial(acc)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c) -> "TracePolynomial":
        return TracePolynomial({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, TracePolynomial):
            return self.scale(other)
        acc = defaultdict(complex)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                acc[tuple(sorted(m1 + m2))] += c1 * c2
        return TracePolynomial(acc)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, TracePolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def max_factors(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def bidegrees(self) -> set:
        out = set()
        for m in self.terms:
            x = sum(w.count("X") for w in m)
            y = sum(w.count("Y") for w in m)
            out.add((x, y))
        return out

    def degree(self) -> int:
        return max((a + b for a, b in self.bidegrees()), default=0)

    def is_real(self, tol=0.0) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def tau_dual(self) -> "TracePolynomial":
        """Reverse every word and conjugate every coefficient.

        ``H`` is tau-compatible (``H(X*, Y*) = conj H(X, Y)``) when this equals ``H``.
        """
        return TracePolynomial.from_terms(
            (c.conjugate(), [w[::-1] for w in m]) for m, c in self.terms.items())

    def is_tau_compatible(self, tol=1e-12) -> bool:
        diff = self - self.tau_dual()
        return all(abs(c) <= tol for c in diff.terms.values())

    # evaluation -----------------------------------------------------------
    def __call__(self, X, Y) -> complex:
        cache = TraceCache(X, Y)
        return sum(c * cache.product(m) for m, c in self.terms.items())

    def gradient(self, X, Y):
        """Return ``(G_X, G_Y)`` with ``dH(E, F) = tr(G_X E + G_Y F)``.

        Leading batch dimensions of ``X`` and ``Y`` are carried through.
        """
        cache = TraceCache(X, Y)
        GX = np.zeros(cache.X.shape, dtype=complex)
        GY = np.zeros(cache.X.shape, dtype=complex)
        for m, c in self.terms.items():
            for i, word in enumerate(m):
                others = c * cache.product(m[:i] + m[i + 1:])
                if np.ndim(others) == 0 and others == 0:
                    continue
                others = np.asarray(others)[..., None, None]
                gx, gy = cache.word_gradient(word)
                GX += others * gx
                GY += others * gy
        return GX, GY

    def __repr__(self):
        return f"TracePolynomial({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms.items():
            coeff = _format_coeff(c)
            factors = "*".join(f"tr({w})" if w else "tr()" for w in m)
            parts.append(f"{coeff}*{factors}" if factors else coeff)
        return " + ".join(parts)

    def to_json(self):
        return [[[c.real, c.imag], list(m)] for m, c in self.terms.items()]

    @classmethod
    def from_json(cls, data):
        return cls.from_terms((complex(c[0], c[1]) if isinstance(c, list) else complex(c), words)
                              for c, words in data)


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:.17g}"
    return f"({c.real:.17g}{c.imag:+.17g}j)"


class TraceCache:
    """Memoised word products and traces at a point ``(X, Y)`` or a batch of points."""

    def __init__(self, X, Y):
        self.X = np.asarray(X, dtype=complex)
        self.Y = np.asarray(Y, dtype=complex)
        self.n = self.X.shape[-1]
        self._mats = {"": np.broadcast_to(np.eye(self.n, dtype=complex), self.X.shape)}
        self._traces = {}

    def matrix(self, word: str):
        M = self._mats.get(word)
        if M is None:
            head = self.matrix(word[:-1])
            M = head @ (self.X if word[-1] == "X" else self.Y)
            self._mats[word] = M
        return M

    def trace(self, word: str) -> complex:
        t = self._traces.get(word)
        if t is None:
            t = np.trace(self.matrix(word), axis1=-2, axis2=-1)
            if t.ndim == 0:
                t = complex(t)
            self._traces[word] = t
        return t

    def product(self, monomial) -> complex:
        out = 1.0 + 0j
        for w in monomial:
            out *= self.trace(w)
        return out

    def word_gradient(self, word: str):
        gx = np.zeros(self.X.shape, dtype=complex)
        gy = np.zeros(self.X.shape, dtype=complex)
        for i, letter in enumerate(word):
            M = self.matrix(word[i + 1:] + word[:i])
            if letter == "X":
                gx += M
            else:
                gy += M
        return gx, gy


def _rotations_after(word: str, letter: str):
    """``(word[i+1:] + word[:i])`` for each position ``i`` holding ``letter``."""
    return [word[i + 1:] + word[:i] for i, c in enumerate(word) if c == letter]


@lru_cache(maxsize=200_000)
def word_bracket(u: str, v: str) -> tuple:
    """Poisson bracket of ``tr(u)`` and ``tr(v)`` as a tuple of ``(word, coefficient)``.

    ``{f, g} = tr(grad_X f grad_Y g - grad_Y f grad_X g)``.
    """
    acc = defaultdict(int)
    for a in _rotations_after(u, "X"):
        for b in _rotations_after(v, "Y"):
            acc[canonical_word(a + b)] += 1
    for a in _rotations_after(u, "Y"):
        for b in _rotations_after(v, "X"):
            acc[canonical_word(a + b)] -= 1
    return tuple((w, c) for w, c in sorted(acc.items()) if c)


def poisson_bracket_symbolic(f: TracePolynomial, g: TracePolynomial) -> TracePolynomial:
    """Exact bracket of two trace polynomials via the Leibniz rule over trace factors."""
    acc = defaultdict(complex)
    for mf, cf in f.terms.items():
        for mg, cg in g.terms.items():
            for i, u in enumerate(mf):
                rest_f = mf[:i] + mf[i + 1:]
                for j, v in enumerate(mg):
                    rest_g = mg[:j] + mg[j + 1:]
                    for w, k in word_bracket(u, v):
                        acc[tuple(sorted(rest_f + rest_g + (w,)))] += cf * cg * k
    return TracePolynomial(acc)


def resolve_identity(H: TracePolynomial, n: int) -> TracePolynomial:
    """Replace every ``tr()`` factor by the scalar ``n``."""
    acc = defaultdict(complex)
    for m, c in H.terms.items():
        k = sum(1 for w in m if not w)
        acc[tuple(w for w in m if w)] += c * n ** k
    return TracePolynomial(acc)
