"""
Compositions of complete generator flows.

A :class:`FlowProgram` is a list of ``(generator, time)`` steps applied left
to right.  Every step is an exact flow, so every program is an exact
symplectic map, and real times keep the real form invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BlowUp, DomainError, NonFinite
from .flows import Generator, fd_jacobian, generator_flow
from .phase import HatPoint


@dataclass
class FlowProgram:
    steps: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        steps = []
        for gen, t in self.steps:
            if not np.isfinite(t):
                raise ValueError(f"non-finite time {t!r} for {gen}")
            steps.append((Generator(gen), t))
        self.steps = steps

    def __len__(self):
        return len(self.steps)

    def __add__(self, other: "FlowProgram") -> "FlowProgram":
        return FlowProgram(self.steps + other.steps, dict(self.meta))

    def __call__(self, p: HatPoint) -> HatPoint:
        return run_program(self, p)

    def inverse(self) -> "FlowProgram":
        """Exact inverse: reversed order, negated times."""
        return FlowProgram([(g, -t) for g, t in reversed(self.steps)], dict(self.meta))

    def is_real_time(self) -> bool:
        return all(np.isreal(t) for _, t in self.steps)

    def total_time(self) -> float:
        return float(sum(abs(t) for _, t in self.steps))

    def compressed(self, tol=0.0) -> "FlowProgram":
        """Merge adjacent steps of the same generator and drop zero-time steps."""
        out = []
        for g, t in self.steps:
            if out and out[-1][0] is g:
                out[-1] = (g, out[-1][1] + t)
            else:
                out.append((g, t))
            if abs(out[-1][1]) <= tol:
                out.pop()
        return FlowProgram(out, dict(self.meta))

    def to_json(self):
        def enc(t):
            t = complex(t)
            return t.real if t.imag == 0 else [t.real, t.imag]

        return {"steps": [[g.value, enc(t)] for g, t in self.steps], "meta": self.meta}

    @classmethod
    def from_json(cls, data):
        steps = []
        for g, t in data["steps"]:
            steps.append((g, complex(t[0], t[1]) if isinstance(t, list) else float(t)))
        return cls(steps, dict(data.get("meta", {})))


def run_program(prog: FlowProgram, p: HatPoint) -> HatPoint:
    for k, (gen, t) in enumerate(prog.steps):
        try:
            p = generator_flow(gen, t, p)
        except NonFinite:
            raise BlowUp(f"non-finite state after step {k}", step=k) from None
    return p


def sum_algorithm(gen_a, gen_b, t) -> FlowProgram:
    """Flow of ``gen_a`` then flow of ``gen_b``; first-order consistent with the sum of the fields."""
    return FlowProgram([(gen_a, t), (gen_b, t)])


def bracket_algorithm(gen_a, gen_b, t) -> FlowProgram:
    """Group commutator ``Psi_{-s} Phi_{-s} Psi_s Phi_s``, ``s = sqrt(t)``, applied right to left.

    ``Phi`` is the flow of ``gen_a``.  The displacement is ``t [V_a, V_b] + O(t^{3/2})``
    with ``[V, W] = DW.V - DV.W``; for Hamiltonian fields this is the field of
    ``{H_b, H_a}``.
    """
    if not t > 0:
        raise DomainError(f"bracket algorithm needs t > 0, got {t}", t)
    s = math.sqrt(t)
    return FlowProgram([(gen_a, s), (gen_b, s), (gen_a, -s), (gen_b, -s)])


def iterate_algorithm(prog_for_time: Callable[[float], FlowProgram], t, m: int) -> FlowProgram:
    """``m`` copies of the time-``t/m`` program."""
    if m < 1:
        raise ValueError("m must be >= 1")
    one = prog_for_time(t / m)
    return FlowProgram(one.steps * m, dict(one.meta))


def bracket_limit(gen_a, gen_b, p: HatPoint, t=1e-6, levels=2) -> np.ndarray:
    """Measured ``lim (A_t(p) - p) / t`` of the bracket algorithm, as an entry vector.

    The quotient is a power series in ``s = sqrt(t)``; ``levels`` Richardson
    steps over ``t, t/4, t/16, ...`` cancel its ``s, s^2, ...`` terms.
    """
    x0 = p.as_vector()

    def quotient(tt):
        return (run_program(bracket_algorithm(gen_a, gen_b, tt), p).as_vector() - x0) / tt

    table = [quotient(t / 4 ** i) for i in range(levels + 1)]
    for level in range(1, levels + 1):
        f = 2.0 ** level
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
    return table[0]


@dataclass
class SeminormReport:
    k: int
    samples: list
    values: list
    sup: float

    def to_json(self):
        return {"k": self.k, "values": [float(v) for v in self.values], "sup": float(self.sup),
                "count": len(self.values)}


def _distance(p: HatPoint, q: HatPoint) -> float:
    return float(np.linalg.norm(p.as_vector() - q.as_vector()))


def ck_seminorm(map1, map2, samples: Sequence[HatPoint], k=0, h=1e-5, executor=None) -> SeminormReport:
    """Pointwise ``C^k`` distance of two maps in entry coordinates, ``k`` in {0, 1}.

    ``k = 0``: Frobenius distance of outputs.  ``k = 1`` adds the max-entry
    distance of the finite-difference Jacobians.
    """
    if k not in (0, 1):
        raise ValueError("only k = 0 and k = 1 are supported")

    def one(p):
        val = _distance(map1(p), map2(p))
        if k == 1:
            val += float(np.max(np.abs(fd_jacobian(map1, p, h) - fd_jacobian(map2, p, h))))
        return val

    values = list(executor.map(one, samples)) if executor is not None else [one(p) for p in samples]
    return SeminormReport(k, list(samples), values, max(values, default=0.0))


def fit_order(xs, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(x)``."""
    lx = np.log(np.asarray(xs, dtype=float))
    le = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(lx, le, 1)[0])
