"""Invariant suites behind ``cmflows verify``.

Each suite returns a list of ``(name, value, bound, passed)`` assertions.
"""
from __future__ import annotations

import numpy as np

from .. import flows
from ..flows import Generator, generator_flow, poisson_bracket, reference_flow, symplectic_defect, tau_compat_defect
from ..phase import commutator, hermitian_defect, moment_real
from ..space import chart_to_hat, chart_to_point, point_to_chart, sample_charts
from ..splitting import FlowProgram
from ..tracepoly import TracePolynomial

TOLERANCES = {
    "symplectic": 1e-6,
    "hermitian": 1e-12,
    "tau": 1e-10,
    "moment": 1e-8,
    "chart": 1e-12,
    "roundtrip": 1e-10,
    "convention": 1e-12,
}


def _check(name, value, bound):
    return {"name": name, "value": float(value), "bound": float(bound), "passed": bool(value < bound)}


def _random_program(rng, length, scale=0.3):
    gens = list(Generator)
    return FlowProgram([(gens[rng.integers(len(gens))], float(rng.uniform(-scale, scale)))
                        for _ in range(length)])


def suite_symplectic(n, rng, tol):
    out = []
    p = chart_to_hat(sample_charts(n, 1, rng, box=2.0)[0])
    for g in Generator:
        d = symplectic_defect(lambda q, g=g: generator_flow(g, 0.7, q), p)
        out.append(_check(f"symplectic/{g.value}", d, tol["symplectic"]))
    for k in range(3):
        prog = _random_program(rng, 16)
        out.append(_check(f"symplectic/program{k}", symplectic_defect(prog, p), tol["symplectic"]))
    return out


def suite_real_form(n, rng, tol):
    out = []
    pts = [chart_to_hat(c) for c in sample_charts(n, 5, rng)]
    for g in Generator:
        herm = max(hermitian_defect(generator_flow(g, 0.9, p)) for p in pts)
        tc = max(tau_compat_defect(lambda q, g=g: generator_flow(g, 0.9, q), p) for p in pts)
        out.append(_check(f"hermitian/{g.value}", herm, tol["hermitian"]))
        out.append(_check(f"tau/{g.value}", tc, tol["tau"]))
    prog = _random_program(rng, 12)
    out.append(_check("hermitian/program", max(hermitian_defect(prog(p)) for p in pts), tol["hermitian"]))
    return out


def suite_moment(n, rng, tol):
    H = (TracePolynomial.trace("XY", 0.5) + TracePolynomial.trace("YY")
         + TracePolynomial.from_terms([(0.1, ["XX", "Y"])]))
    p = chart_to_hat(sample_charts(n, 1, rng, box=1.5)[0])
    C0 = commutator(p.X, p.Y)
    traj = reference_flow(H, 0.5, p, 500, trajectory=True)
    drift = max(np.max(np.abs(commutator(q.X, q.Y) - C0)) for q in traj)
    return [_check("moment/rk4", drift, tol["moment"])]


def suite_chart(n, rng, tol):
    out = []
    worst_m = worst_r = 0.0
    for c in sample_charts(n, 20, rng):
        h = chart_to_point(c)
        worst_m = max(worst_m, np.max(np.abs(moment_real(h) - 1j * np.eye(n))))
        back = point_to_chart(h)
        worst_r = max(worst_r, np.max(np.abs(back.x - c.x)), np.max(np.abs(back.y - c.y)))
    out.append(_check("chart/moment", worst_m, tol["chart"]))
    out.append(_check("chart/roundtrip", worst_r, tol["roundtrip"]))
    return out


def suite_convention(n, rng, tol):
    p = chart_to_hat(sample_charts(2, 1, rng)[0])
    val = poisson_bracket(TracePolynomial.trace("X"), TracePolynomial.trace("Y"), p)
    return [_check("convention/pin", abs(val - flows.CONVENTION_PIN), tol["convention"])]


SUITES = {
    "symplectic": suite_symplectic,
    "real_form": suite_real_form,
    "moment": suite_moment,
    "chart": suite_chart,
    "convention": suite_convention,
}


def run_suite(name, n, seed, tol):
    names = list(SUITES) if name == "all" else [name]
    results = []
    for s in names:
        results.extend(SUITES[s](n, np.random.default_rng(seed), tol))
    return results
