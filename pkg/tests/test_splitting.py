import math

import numpy as np
import pytest

from cmflows.errors import BlowUp, DomainError
from cmflows.flows import Generator, generator_flow, hamiltonian_field, poisson_bracket, reference_flow_many, symplectic_defect, tau_compat_defect
from cmflows.phase import HatPoint, hermitian_defect
from cmflows.splitting import (FlowProgram, bracket_algorithm, bracket_limit, ck_seminorm, fit_order,
                               iterate_algorithm, run_program, sum_algorithm)
from cmflows.tracepoly import TracePolynomial, poisson_bracket_symbolic

from conftest import hermitian_samples


def vec_dist(p, q):
    return float(np.linalg.norm(p.as_vector() - q.as_vector()))


def random_program(rng, length, scale=0.3):
    gens = list(Generator)
    return FlowProgram([(gens[rng.integers(4)], float(rng.uniform(-scale, scale))) for _ in range(length)])


def test_empty_program_and_inverse():
    p = hermitian_samples(2, 1)[0]
    assert run_program(FlowProgram([]), p) is p
    q = run_program(FlowProgram([("TrY", 1.0), ("TrY", -1.0)]), p)
    assert np.array_equal(q.as_vector(), p.as_vector())


def test_program_validation():
    with pytest.raises(ValueError):
        FlowProgram([("TrY", float("nan"))])
    with pytest.raises(ValueError):
        FlowProgram([("TrZ", 1.0)])


def test_json_roundtrip():
    prog = FlowProgram([("TrY2", 0.125), ("TrX3", -0.5), ("TrY", 1j)], {"note": "x"})
    back = FlowProgram.from_json(prog.to_json())
    assert back.steps == prog.steps and back.meta == prog.meta
    assert prog.to_json()["steps"][0] == ["TrY2", 0.125]


def test_blow_up_detected():
    p = HatPoint(np.array([[1e200]]), np.array([[1e200]]))
    with pytest.raises(BlowUp):
        with np.errstate(over="ignore", invalid="ignore"):
            run_program(FlowProgram([("TrX3", 1e200)]), p)


def test_interleaved_halves_differ():
    p = hermitian_samples(2, 1)[0]
    a = run_program(FlowProgram([("TrY2", 0.5), ("TrX3", 0.5)]), p)
    b = run_program(FlowProgram([("TrY2", 0.25), ("TrX3", 0.25), ("TrY2", 0.25), ("TrX3", 0.25)]), p)
    assert vec_dist(a, b) > 1e-3


def test_group_property(rng):
    for p in hermitian_samples(3, 5):
        prog = random_program(rng, 20)
        q = run_program(prog + prog.inverse(), p)
        assert vec_dist(q, p) < 1e-10 * max(1, np.linalg.norm(p.as_vector()))


def test_programs_symplectic_and_real(rng):
    pts = hermitian_samples(2, 3, box=2.0)
    for _ in range(5):
        prog = random_program(rng, 16)
        for p in pts:
            assert symplectic_defect(prog, p) < 1e-6
            assert hermitian_defect(prog(p)) < 1e-12
            assert tau_compat_defect(prog, p) < 1e-10


def test_sum_algorithm_identity_and_order():
    p = hermitian_samples(2, 1, box=1.0)[0]
    assert np.array_equal(run_program(sum_algorithm("TrY", "TrX3", 0.0), p).as_vector(), p.as_vector())
    H = TracePolynomial.trace("Y") + TracePolynomial.trace("XXX")
    ts = [2.0 ** -k for k in range(3, 10)]
    refs = [reference_flow_many(H, t, [p], 200)[0] for t in ts]
    errs = [vec_dist(run_program(sum_algorithm("TrY", "TrX3", t), p), r) for t, r in zip(ts, refs)]
    assert 1.7 <= fit_order(ts, errs) <= 2.3


def test_iterate_algorithm_bookkeeping():
    one = iterate_algorithm(lambda t: sum_algorithm("TrY", "TrX3", t), 1.0, 1)
    assert one.steps == sum_algorithm("TrY", "TrX3", 1.0).steps
    many = iterate_algorithm(lambda t: sum_algorithm("TrY", "TrX3", t), 1.0, 8)
    assert len(many) == 16 and math.isclose(many.total_time(), 2.0)
    with pytest.raises(ValueError):
        iterate_algorithm(lambda t: sum_algorithm("TrY", "TrX3", t), 1.0, 0)


def test_bracket_algorithm_shape_and_domain():
    prog = bracket_algorithm("TrY", "TrX3", 0.04)
    assert prog.steps == [(Generator.TrY, 0.2), (Generator.TrX3, 0.2),
                          (Generator.TrY, -0.2), (Generator.TrX3, -0.2)]
    for t in (0.0, -1.0):
        with pytest.raises(DomainError):
            bracket_algorithm("TrY", "TrX3", t)


def test_bracket_consistency_all_pairs():
    p = hermitian_samples(2, 1, seed=7, box=1.5)[0]
    for a in Generator:
        for b in Generator:
            if a is b:
                continue
            target = hamiltonian_field(poisson_bracket_symbolic(b.hamiltonian, a.hamiltonian), p).as_vector()
            assert np.max(np.abs(bracket_limit(a, b, p) - target)) < 1e-4


def test_commuting_pair_is_identity():
    p = hermitian_samples(2, 1)[0]
    assert abs(poisson_bracket(Generator.TrX3.hamiltonian, Generator.TrX_sq.hamiltonian, p)) == 0
    q = run_program(bracket_algorithm("TrX3", "TrX_sq", 0.01), p)
    assert vec_dist(q, p) < 1e-12 * np.linalg.norm(p.as_vector())


def test_bracket_displacement_linear_in_t():
    p = hermitian_samples(2, 1, box=1.0)[0]
    d = [vec_dist(run_program(bracket_algorithm("TrY2", "TrX3", t), p), p) for t in (1e-2, 1e-4)]
    assert 0.85 <= fit_order([1e-2, 1e-4], d) <= 1.15


def test_ck_seminorm_examples():
    pts = hermitian_samples(2, 3)
    ident = lambda p: p
    assert ck_seminorm(ident, ident, pts, 1).sup == 0
    c = np.array([[0.3, 0.1j], [0.0, -0.2]])
    shift = lambda p: p.replace(p.X + c)
    r0 = ck_seminorm(ident, shift, pts, 0)
    assert all(abs(v - np.linalg.norm(c)) < 1e-12 for v in r0.values)
    r1 = ck_seminorm(ident, shift, pts, 1)
    assert max(abs(a - b) for a, b in zip(r1.values, r0.values)) < 1e-8
    eps = 1e-3
    lin = lambda p: p.replace(p.X + eps * p.Y)
    r = ck_seminorm(ident, lin, pts, 1)
    jac = [v - vec_dist(p, lin(p)) for v, p in zip(r.values, pts)]
    assert all(abs(j - eps) < 1e-8 for j in jac)
    assert r.sup == max(r.values)
    with pytest.raises(ValueError):
        ck_seminorm(ident, ident, pts, 2)


def test_sum_algorithm_iterated_first_order():
    p = hermitian_samples(2, 1, box=1.0)[0]
    H = TracePolynomial.trace("YY") + TracePolynomial.trace("XXX")
    ref = reference_flow_many(H, 0.5, [p], 2000)[0]
    ms = [4, 8, 16, 32, 64, 128, 256]
    errs = [vec_dist(iterate_algorithm(lambda t: sum_algorithm("TrY2", "TrX3", t), 0.5, m)(p), ref) for m in ms]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert 0.8 <= fit_order([1 / m for m in ms], errs) <= 1.2
