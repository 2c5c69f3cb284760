"""
Numeric Lie-closure search over the generator Hamiltonians.

Starting from the generator Hamiltonians, brackets are adjoined breadth first
by depth.  Every element stays an exact trace polynomial (brackets are taken
symbolically), and targets are tested by least squares of their sample
values against the span of the elements found so far.

Two structural facts keep the span tests small:

* every element is bihomogeneous in ``(X, Y)`` and the rank-one variety is
  invariant under ``(X, Y) -> (c X, Y / c)``, so a target of weight
  ``deg_X - deg_Y = w`` only needs elements of the same weight;
* targets are matched against elements of total degree at most their own.

A recipe realizes as a :class:`FlowProgram`: leaves are exact generator flows,
``add`` concatenates, ``scale`` rescales time and ``bracket`` is a group
commutator of the realized children.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, DomainError
from .flows import Generator
from .phase import HatPoint, rank_one_defect
from .splitting import FlowProgram
from .tracepoly import TracePolynomial, poisson_bracket_symbolic

SPAN_TOL = 1e-6
INDEPENDENCE_TOL = 1e-8
PRUNE_TOL = 1e-9


# expression trees ------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Node of a Lie combination.

    ``tag`` is one of ``"gen"``, ``"scale"``, ``"add"``, ``"bracket"``.  A
    ``bracket`` node ``(a, b)`` stands for the Poisson bracket ``{a, b}``.
    """

    tag: str
    gen: Generator | None = None
    coeff: float = 1.0
    children: tuple = ()

    @staticmethod
    def leaf(gen) -> "Expr":
        return Expr("gen", gen=Generator(gen))

    @staticmethod
    def scaled(c, child: "Expr") -> "Expr":
        return Expr("scale", coeff=float(c), children=(child,))

    @staticmethod
    def sum(children) -> "Expr":
        children = tuple(children)
        if len(children) == 1:
            return children[0]
        return Expr("add", children=children)

    @staticmethod
    def bracket(a: "Expr", b: "Expr") -> "Expr":
        return Expr("bracket", children=(a, b))

    @property
    def depth(self) -> int:
        if self.tag == "gen":
            return 0
        inner = max(c.depth for c in self.children)
        return inner + 1 if self.tag == "bracket" else inner

    def leaves(self):
        if self.tag == "gen":
            yield self.gen
        for c in self.children:
            yield from c.leaves()

    def hamiltonian(self) -> TracePolynomial:
        if self.tag == "gen":
            return self.gen.hamiltonian
        if self.tag == "scale":
            return self.children[0].hamiltonian().scale(self.coeff)
        if self.tag == "add":
            out = TracePolynomial.zero()
            for c in self.children:
                out = out + c.hamiltonian()
            return out
        a, b = self.children
        return poisson_bracket_symbolic(a.hamiltonian(), b.hamiltonian())

    def to_json(self):
        if self.tag == "gen":
            return {"tag": "gen", "gen": self.gen.value}
        if self.tag == "scale":
            return {"tag": "scale", "coeff": self.coeff, "child": self.children[0].to_json()}
        return {"tag": self.tag, "children": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, d) -> "Expr":
        tag = d["tag"]
        if tag not in ("gen", "scale", "add", "bracket"):
            raise ValueError(f"unknown node tag {tag!r}")
        if tag == "gen":
            return cls.leaf(d["gen"])
        if tag == "scale":
            return cls.scaled(d["coeff"], cls.from_json(d["child"]))
        children = tuple(cls.from_json(c) for c in d["children"])
        if tag == "add":
            return cls("add", children=children)
        if len(children) != 2:
            raise ValueError("bracket node needs exactly two children")
        return cls("bracket", children=children)

    def __str__(self):
        if self.tag == "gen":
            return self.gen.value
        if self.tag == "scale":
            return f"{self.coeff:.6g}*{self.children[0]}"
        if self.tag == "add":
            return "(" + " + ".join(str(c) for c in self.children) + ")"
        a, b = self.children
        return f"{{{a}, {b}}}"


@dataclass
class ClosureRecipe:
    target: TracePolynomial
    expression: Expr | None
    residual: float
    depth: int | None = None
    resolved: bool = False
    history: list = field(default_factory=list)  # residual after each depth level
    span_dim: int = 0

    def to_json(self):
        return {"target": str(self.target), "target_terms": self.target.to_json(),
                "expression": None if self.expression is None else self.expression.to_json(),
                "residual": float(self.residual), "depth": self.depth, "resolved": self.resolved,
                "history": [float(h) for h in self.history], "span_dim": self.span_dim}

    @classmethod
    def from_json(cls, d) -> "ClosureRecipe":
        expr = None if d.get("expression") is None else Expr.from_json(d["expression"])
        return cls(TracePolynomial.from_json(d["target_terms"]), expr, float(d["residual"]),
                   d.get("depth"), bool(d.get("resolved", False)), list(d.get("history", [])),
                   int(d.get("span_dim", 0)))


# search -----------------------------------------------------------------------

@dataclass
class _Element:
    expr: Expr
    H: TracePolynomial
    depth: int
    weight: int
    degree: int
    values: np.ndarray  # mean-removed sample values


def _weight_degree(H: TracePolynomial):
    bideg = H.bidegrees()
    weights = {a - b for a, b in bideg}
    if len(weights) != 1:
        return None, H.degree()
    return weights.pop(), H.degree()


def _sample_values(H: TracePolynomial, samples) -> np.ndarray:
    vals = np.array([H(p.X, p.Y) for p in samples], dtype=complex)
    return vals - vals.mean()


def _real_stack(M):
    # real coefficients only: stack real and imaginary parts as extra rows
    return np.concatenate([M.real, M.imag], axis=0)


def _fit(target_vals, elems):
    """Least-squares real coefficients and relative residual."""
    b = _real_stack(target_vals[:, None])[:, 0]
    bn = np.linalg.norm(b)
    if bn == 0:
        return np.zeros(len(elems)), 0.0
    if not elems:
        return np.zeros(0), 1.0
    A = _real_stack(np.stack([e.values for e in elems], axis=1))
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    c, *_ = np.linalg.lstsq(A / scale, b, rcond=None)
    res = float(np.linalg.norm(A / scale @ c - b) / bn)
    return c / scale, res


class ClosureSearch:
    """Breadth-first bracket closure with numeric span tests on fixed samples."""

    def __init__(self, samples, generators=tuple(Generator), degree_cap=6,
                 dim_cap=200, variety_tol=1e-8):
        samples = list(samples)
        if not samples:
            raise ValueError("closure search needs samples")
        for k, p in enumerate(samples):
            d = rank_one_defect(p)
            if not d < variety_tol:
                raise DomainError(f"sample {k} is off the variety (defect {d:.3e})", d)
        self.samples = samples
        self.degree_cap = degree_cap
        self.dim_cap = dim_cap
        self.elements: list[_Element] = []
        self.depth = 0
        self.exhausted = False
        self._seen = set()
        for g in generators:
            self._adjoin(Expr.leaf(g), Generator(g).hamiltonian, 0)

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def _pool(self, weight, degree):
        return [e for e in self.elements if e.weight == weight and e.degree <= degree]

    def _adjoin(self, expr, H, depth) -> bool:
        if H.is_zero() or H in self._seen:
            return False
        w, deg = _weight_degree(H)
        if w is None or deg > self.degree_cap:
            return False
        vals = _sample_values(H, self.samples)
        if np.linalg.norm(vals) <= 1e-12 * max(1.0, np.max(np.abs(vals))):
            return False  # constant on the samples
        probe = _Element(expr, H, depth, w, deg, vals)
        _, res = _fit(vals, self._pool(w, deg))
        if res < INDEPENDENCE_TOL:
            return False
        self._seen.add(H)
        self.elements.append(probe)
        return True

    def grow(self) -> int:
        """Adjoin all brackets whose deeper operand sits at the current top depth."""
        if self.dimension >= self.dim_cap:
            self.exhausted = True
            return 0
        top = self.depth
        current = list(self.elements)
        pairs = []
        for i, a in enumerate(current):
            for b in current[i + 1:]:
                if max(a.depth, b.depth) != top:
                    continue
                if a.degree + b.degree - 2 > self.degree_cap:
                    continue
                pairs.append((a, b))
        # low-degree operands first: their flows are cheaper to realize accurately
        pairs.sort(key=lambda ab: (max(ab[0].degree, ab[1].degree), ab[0].degree + ab[1].degree))
        added = 0
        for a, b in pairs:
            H = poisson_bracket_symbolic(a.H, b.H)
            if self._adjoin(Expr.bracket(a.expr, b.expr), H, top + 1):
                added += 1
                if self.dimension >= self.dim_cap:
                    self.exhausted = True
                    self.depth = top + 1
                    return added
        self.depth = top + 1
        return added

    def fit(self, target: TracePolynomial):
        """Best real combination of same-weight elements; ``(expr, residual, used)``."""
        w, deg = _weight_degree(target)
        vals = _sample_values(target, self.samples)
        if w is None:
            raise ValueError("targets must be bihomogeneous up to weight")
        pool = self._pool(w, deg)
        c, res = _fit(vals, pool)
        if not pool or np.linalg.norm(vals) == 0:
            return None, res, 0
        big = np.max(np.abs(c)) if c.size else 0.0
        terms = [Expr.scaled(ci, e.expr) for ci, e in zip(c, pool) if abs(ci) > PRUNE_TOL * big]
        expr = Expr.sum(terms) if terms else None
        return expr, res, len(pool)


def _split_target(target: TracePolynomial):
    """Group terms by weight so mixed targets resolve component-wise."""
    parts = {}
    for m, c in target.terms.items():
        w = sum(word.count("X") - word.count("Y") for word in m)
        parts.setdefault(w, {})[m] = c
    return [TracePolynomial(t) for _, t in sorted(parts.items())]


def closure_search(targets, samples, max_depth=6, dim_cap=200, tol=SPAN_TOL,
                   degree_cap=None, generators=tuple(Generator)) -> list[ClosureRecipe]:
    """Resolve each target as a real Lie combination of the generator Hamiltonians.

    Returns one recipe per target.  Unresolved targets come back with
    ``resolved=False`` and their best residual: a budget report, not an error.
    """
    targets = list(targets)
    for H in targets:
        if not H.is_real():
            raise DomainError(f"target {H} has non-real coefficients", H)
    if degree_cap is None:
        degree_cap = max((H.degree() for H in targets), default=0) + 2
    search = ClosureSearch(samples, generators, degree_cap, dim_cap)
    parts = [_split_target(H) for H in targets]
    history = [[] for _ in targets]
    done = [None] * len(targets)

    def attempt(i):
        exprs, worst, dim = [], 0.0, 0
        for part in parts[i]:
            expr, res, used = search.fit(part)
            worst = max(worst, res)
            dim += used
            if expr is not None:
                exprs.append(expr)
        return (Expr.sum(exprs) if exprs else None), worst, dim

    while True:
        for i in range(len(targets)):
            if done[i] is not None:
                continue
            expr, res, dim = attempt(i)
            history[i].append(res)
            if res < tol:
                done[i] = ClosureRecipe(targets[i], expr, res, search.depth, True,
                                        history[i], dim)
        if all(d is not None for d in done) or search.depth >= max_depth or search.exhausted:
            break
        search.grow()

    out = []
    for i, H in enumerate(targets):
        if done[i] is None:
            expr, res, dim = attempt(i)
            done[i] = ClosureRecipe(H, expr, res, None, False, history[i], dim)
        out.append(done[i])
    return out


def require_resolved(recipes) -> list[ClosureRecipe]:
    missing = [r for r in recipes if not r.resolved]
    if missing:
        worst = max(missing, key=lambda r: r.residual)
        raise BudgetExhausted(
            f"{len(missing)} target(s) unresolved within budget; worst {worst.target} "
            f"residual {worst.residual:.3e}",
            report=[r.to_json() for r in recipes])
    return recipes


# realization --------------------------------------------------------------------

def realize(expr: Expr, t: float, symmetric: bool = True) -> FlowProgram:
    """Program whose time-``t`` action approximates the flow of ``expr.hamiltonian()``.

    The bracket node ``{a, b}`` is consistent with the commutator that runs
    ``b`` first: with ``P, Q`` the realizations of ``b, a`` at ``s`` the
    commutator is ``P, Q, P^-1, Q^-1`` and moves by ``s^2`` along the field.

    ``symmetric=False`` uses one commutator with ``s = sqrt(t)``.  The default
    composes the commutators at ``s`` and ``-s`` with ``s = sqrt(t / 2)``; the
    odd-order error terms of the two cancel, which matters once brackets nest.
    Negative times use the exact inverse of the positive-time program.
    """
    t = float(t)
    if t == 0.0:
        return FlowProgram([])
    if expr.tag == "gen":
        return FlowProgram([(expr.gen, t)])
    if expr.tag == "scale":
        return realize(expr.children[0], expr.coeff * t, symmetric)
    if expr.tag == "add":
        prog = FlowProgram([])
        for c in expr.children:
            prog = prog + realize(c, t, symmetric)
        return prog
    if t < 0:
        return realize(expr, -t, symmetric).inverse()
    a, b = expr.children
    if not symmetric:
        s = math.sqrt(t)
        return _commutator(realize(b, s, False), realize(a, s, False))
    s = math.sqrt(t / 2)
    return (_commutator(realize(b, s), realize(a, s))
            + _commutator(realize(b, -s), realize(a, -s)))


def _commutator(P: FlowProgram, Q: FlowProgram) -> FlowProgram:
    return P + Q + P.inverse() + Q.inverse()
