"""Acceptance gate: one PASS/FAIL line per criterion (run with ``-s`` or see the summary lines)."""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from cmflows.closure import closure_search
from cmflows.flows import (Generator, generator_flow, hamiltonian_field, reference_flow,
                           symplectic_defect, tau_compat_defect)
from cmflows.phase import (SIGMA, HatPoint, commutator, group_act, hermitian_defect, moment_real, mu_one,
                           norm_sq, random_group_element, random_phase_point, sigma)
from cmflows.pipeline import (ApproxRequest, Budget, approximate_flow, build_program, closure_samples,
                              composite_symplectic_defect, push_out, region_samples, synthetic_stages,
                              verify_real_preservation)
from cmflows.space import chart_to_point, orbit_normalize, point_to_chart, sample_charts, trace_embedding
from cmflows.splitting import (FlowProgram, bracket_limit, fit_order, iterate_algorithm, sum_algorithm)
from cmflows.tracepoly import TracePolynomial, poisson_bracket_symbolic

from conftest import hermitian_samples

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "acceptance.json").read_text())
T = TracePolynomial.trace


@pytest.fixture
def verdict(capsys):
    def report(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, f"criterion {k}: {detail}"
    return report


def vec_dist(p, q):
    return float(np.linalg.norm(p.as_vector() - q.as_vector()))


def random_program(rng, length, scale=0.3):
    gens = list(Generator)
    return FlowProgram([(gens[rng.integers(4)], float(rng.uniform(-scale, scale))) for _ in range(length)])


def test_criterion_1_chart_moment(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_m = worst_r = 0.0
    for k in range(200):
        n = 1 + k % 5
        c = sample_charts(n, 1, rng, min_gap=1e-3)[0]
        h = chart_to_point(c)
        worst_m = max(worst_m, float(np.max(np.abs(moment_real(h) - 1j * np.eye(n)))))
        back = point_to_chart(h)
        worst_r = max(worst_r, float(np.max(np.abs(back.x - c.x))), float(np.max(np.abs(back.y - c.y))))
    elapsed = time.perf_counter() - start
    verdict(1, worst_m < 1e-12 and worst_r < 1e-10 and elapsed < 5,
            f"moment {worst_m:.2e} < 1e-12, round-trip {worst_r:.2e} < 1e-10, {elapsed:.2f}s < 5s")


def _emitted_programs():
    reg = region_samples(2, 5.0, 10, 1)
    xy = approximate_flow(ApproxRequest(T("XY"), 0.25, reg, 1e-2, Budget(8, 8))).program
    recipe = closure_search([T("XXYY")], closure_samples(2, 40, 0))[0]
    quartic = build_program(recipe, 0.01, 2, 2)
    stages = push_out(synthetic_stages(2, [0.5, 0.25, 0.125]), lambda R: region_samples(2, R, 4, 0)).program
    return {"tr XY": xy, "tr XXYY": quartic, "push-out": stages}


def test_criterion_2_real_form(verdict):
    rng = np.random.default_rng(2)
    samples = hermitian_samples(2, 50, seed=2, box=2.0) + hermitian_samples(3, 50, seed=3, box=2.0)
    maps = {g.value: (lambda q, g=g, s=float(rng.uniform(-1, 1)): generator_flow(g, s, q)) for g in Generator}
    maps.update(_emitted_programs())
    maps["random"] = random_program(rng, 24, scale=0.02)
    herm = tau = 0.0
    for f in maps.values():
        for p in samples:
            herm = max(herm, hermitian_defect(f(p)))
            tau = max(tau, tau_compat_defect(f, p))
    verdict(2, herm < 1e-12 and tau < 1e-10,
            f"{len(maps)} maps on 100 samples: Hermiticity {herm:.2e} < 1e-12, tau {tau:.2e} < 1e-10")


def test_criterion_3_symplectic(verdict):
    rng = np.random.default_rng(3)
    p = hermitian_samples(2, 1, seed=3, box=2.0)[0]
    worst = max(symplectic_defect(lambda q, g=g: generator_flow(g, 0.7, q), p) for g in Generator)
    for _ in range(10):
        worst = max(worst, symplectic_defect(random_program(rng, int(rng.integers(1, 33))), p))
    verdict(3, worst < 1e-6, f"FD defect {worst:.2e} < 1e-6 over 4 generators and 10 programs")


def _random_hamiltonian(rng):
    words = ["X", "Y", "XX", "XY", "YY", "XXX", "XXY", "XYY", "YYY", "XXXX", "XXYY", "XYXY", "XYYY", "YYYY"]
    terms = []
    for w in rng.choice(words, size=4, replace=False):
        terms.append((float(rng.uniform(-0.1, 0.1)), [str(w)]))
    a, b = rng.choice(words[:5], size=2)
    terms.append((float(rng.uniform(-0.1, 0.1)), [str(a), str(b)]))
    return TracePolynomial.from_terms(terms)


def test_criterion_4_moment_conservation(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for k in range(10):
        n = 2 + k % 2
        p = hermitian_samples(n, 1, seed=40 + k, box=1.0)[0]
        C0 = commutator(p.X, p.Y)
        traj = reference_flow(_random_hamiltonian(rng), 1.0, p, 1000, trajectory=True)
        worst = max(worst, max(float(np.max(np.abs(commutator(q.X, q.Y) - C0))) for q in traj))
    verdict(4, worst < 1e-8, f"[X,Y] drift {worst:.2e} < 1e-8 over 10 Hamiltonians")


def test_criterion_5_splitting_orders(verdict):
    start = time.perf_counter()
    p = hermitian_samples(2, 1, box=1.0)[0]
    H = T("YY") + T("XXX")
    ref = reference_flow(H, 0.5, p, 2000)
    ms = [4, 8, 16, 32, 64, 128, 256]
    errs = [vec_dist(iterate_algorithm(lambda t: sum_algorithm("TrY2", "TrX3", t), 0.5, m)(p), ref) for m in ms]
    order = fit_order([1 / m for m in ms], errs)
    q = hermitian_samples(2, 1, seed=7, box=1.5)[0]
    worst = 0.0
    for a in Generator:
        for b in Generator:
            if a is not b:
                target = hamiltonian_field(poisson_bracket_symbolic(b.hamiltonian, a.hamiltonian), q).as_vector()
                worst = max(worst, float(np.max(np.abs(bracket_limit(a, b, q, t=1e-6) - target))))
    elapsed = time.perf_counter() - start
    verdict(5, 0.8 <= order <= 1.2 and worst < 1e-4 and elapsed < 60,
            f"sum order {order:.3f} in [0.8, 1.2], bracket consistency {worst:.2e} < 1e-4, {elapsed:.1f}s < 60s")


def test_criterion_6_closure_certificate(verdict):
    targets = [T("X" * j + "Y" * (d - j)) for d in range(1, 5) for j in range(d + 1)]
    recipes = closure_search(targets, closure_samples(2, 40, 0), max_depth=6, dim_cap=200)
    depths = {str(r.target).removeprefix("1*"): r.depth for r in recipes}
    ok = all(r.resolved and r.residual < 1e-6 and r.depth <= 6 and r.span_dim <= 200 for r in recipes)
    worst = max(r.residual for r in recipes)
    ok = ok and depths == FIXTURES["closure_depths_n2"]
    verdict(6, ok, f"14 targets resolved, max residual {worst:.1e}, max depth {max(depths.values())}, "
                   f"depths match fixture")


def test_criterion_7_end_to_end(verdict):
    fx = FIXTURES["tr_xy_ladder"]
    reg = region_samples(fx["region"]["n"], fx["region"]["R"], fx["region"]["count"], fx["region"]["seed"])
    errs = {}
    for l in (1, 2, 4, 8):
        req = ApproxRequest(T("XY"), fx["t"], reg, 1e-2, Budget(fx["m"], l))
        errs[l] = approximate_flow(req, raise_on_miss=False).report.sup
    decreasing = all(errs[b] < errs[a] for a, b in ((1, 2), (2, 4), (4, 8)))
    matches = all(abs(errs[l] - fx["errors"][str(l)]) < 1e-3 * fx["errors"][str(l)] for l in errs)
    verdict(7, errs[8] < 1e-2 and decreasing and matches,
            "C0 errors " + ", ".join(f"l={l}: {e:.2e}" for l, e in errs.items()) + " (< 1e-2 at l=8, decreasing)")


def test_criterion_8_push_out(verdict):
    stages = synthetic_stages(2, [2.0 ** -j for j in (1, 2, 3)])
    res = push_out(stages, lambda R: region_samples(2, R, 12, int(10 * R)))
    pts = region_samples(2, 5.0, 12, 50)
    symp = composite_symplectic_defect(res.program, pts[:3])
    real = verify_real_preservation(res.program, pts)
    rf = max(real.hermitian, real.trace_imag)
    verdict(8, res.passed and symp < 1e-5 and rf < 1e-8,
            f"stage bounds pass, symplectic {symp:.2e} < 1e-5, real-form {rf:.2e} < 1e-8")


def test_criterion_9_orbit_normalization(verdict):
    rng = np.random.default_rng(9)
    worst_mu = worst_tr = 0.0
    most_iter = 0
    for k in range(50):
        n = 2 + k % 2
        z = chart_to_point(sample_charts(n, 1, rng, box=2.0)[0]).to_phase_point()
        moved = group_act(random_group_element(n, rng, cond=float(rng.uniform(1, 100))), z)
        res = orbit_normalize(moved)
        e0 = trace_embedding(z.hat()).values
        e1 = trace_embedding(res.point.hat()).values
        worst_mu = max(worst_mu, float(np.linalg.norm(mu_one(res.point))))
        worst_tr = max(worst_tr, float(np.max(np.abs(e1 - e0))) / max(1.0, float(np.max(np.abs(e0)))))
        most_iter = max(most_iter, res.iterations)
    verdict(9, worst_mu < 1e-8 and worst_tr < 1e-7 and most_iter <= 500,
            f"|mu1| {worst_mu:.2e} < 1e-8, trace drift {worst_tr:.2e} < 1e-7, max iterations {most_iter}")


def test_criterion_10_sigma_form(verdict):
    rng = np.random.default_rng(10)
    imag = 0.0
    for k in range(20):
        n = 2 + k % 2
        p = HatPoint(rng.standard_normal((n, n)), rng.standard_normal((n, n)), SIGMA)
        for g in Generator:
            q = generator_flow(g, float(rng.uniform(-1, 1)), p)
            imag = max(imag, float(np.max(np.abs(q.X.imag))), float(np.max(np.abs(q.Y.imag))))
        q = random_program(rng, 16)(p)
        imag = max(imag, float(np.max(np.abs(q.X.imag))), float(np.max(np.abs(q.Y.imag))))
    equi = 0.0
    for k in range(100):
        n = 1 + k % 4
        z = random_phase_point(n, rng)
        g = random_group_element(n, rng)
        lhs, rhs = sigma(group_act(g, z)), group_act(g.conj(), sigma(z))
        d = max(float(np.max(np.abs(a - b))) for a, b in
                ((lhs.X, rhs.X), (lhs.Y, rhs.Y), (lhs.v, rhs.v), (lhs.w, rhs.w)))
        equi = max(equi, d / max(1.0, float(np.sqrt(norm_sq(z)))))
    verdict(10, imag < 1e-14 and equi < 1e-12,
            f"imaginary parts {imag:.1e} < 1e-14, sigma equivariance {equi:.2e} < 1e-12")
