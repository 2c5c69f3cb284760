"""
Approximation of Hamiltonian flows by compositions of complete generator flows.

``approximate_flow`` slices ``[0, t]`` into ``m`` pieces, resolves ``H`` as a
real Lie combination of the generators, realizes the combination as a program
and iterates it ``l`` times per slice.  The result is compared with an RK4
reference flow on a finite sample of a sublevel set.

``push_out`` composes staged near-identity programs and checks the Cauchy
bounds that make the infinite version converge.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closure import ClosureRecipe, closure_search, realize, require_resolved
from .errors import DomainError, StageRejected, TargetMiss
from .flows import Generator, fd_jacobian, omega_matrix, reference_flow_many
from .jsonio import digest, hat_point_to_json
from .phase import HatPoint, hermitian_defect
from .space import ExhaustionConfig, chart_to_hat, sample_charts, sample_sublevel, trace_embedding
from .splitting import FlowProgram, SeminormReport, ck_seminorm
from .tracepoly import TracePolynomial

REAL_FORM_TOL = 1e-9


@dataclass
class Budget:
    m: int = 8
    l: int = 8
    max_depth: int = 6
    dim_cap: int = 200
    closure_samples: int = 40
    reference_steps: int = 1000

    def __post_init__(self):
        if self.m < 1 or self.l < 1:
            raise ValueError("m and l must be >= 1")

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class ApproxRequest:
    H: TracePolynomial
    t: float
    region: list
    epsilon: float = 1e-2
    budget: Budget = field(default_factory=Budget)
    seed: int = 0
    threads: int = 1

    def validate(self):
        if not self.H.is_tau_compatible():
            raise DomainError(f"Hamiltonian {self.H} is not tau-compatible (real coefficients required)")
        if not np.isfinite(self.t):
            raise DomainError("time must be finite", self.t)
        if not self.region:
            raise DomainError("empty region")
        for k, p in enumerate(self.region):
            d = hermitian_defect(p)
            if d > 1e-10 * max(1.0, float(np.max(np.abs(p.as_vector())))):
                raise DomainError(f"region sample {k} is off the real form (defect {d:.3e})", d)
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive", self.epsilon)

    def to_json(self):
        return {"H": str(self.H), "H_terms": self.H.to_json(), "t": self.t,
                "epsilon": self.epsilon, "budget": self.budget.to_json(), "seed": self.seed,
                "region": [hat_point_to_json(p) for p in self.region]}


@dataclass
class ApproxResult:
    program: FlowProgram
    report: SeminormReport
    recipe: ClosureRecipe
    manifest: dict


def closure_samples(n, count, seed) -> list[HatPoint]:
    """Real-form span-test samples from charts in the ``[-5, 5]`` box."""
    rng = np.random.default_rng(seed)
    return [chart_to_hat(c) for c in sample_charts(n, count, rng)]


def region_samples(n, R, count, seed) -> list[HatPoint]:
    cfg = ExhaustionConfig.default(n, R)
    return sample_sublevel(cfg, count, np.random.default_rng(seed))


def build_program(recipe: ClosureRecipe, t, m, l) -> FlowProgram:
    """``(A_{t/(m l)})^{m l}``: ``l`` iterations in each of ``m`` slices, compressed."""
    one = realize(recipe.expression, t / (m * l))
    return FlowProgram(one.steps * (m * l)).compressed()


def approximate_flow(req: ApproxRequest, raise_on_miss=True) -> ApproxResult:
    req.validate()
    n = req.region[0].n
    b = req.budget
    samples = closure_samples(n, b.closure_samples, req.seed)
    recipe = require_resolved(closure_search([req.H], samples, b.max_depth, b.dim_cap))[0]
    prog = build_program(recipe, req.t, b.m, b.l)
    prog.meta = {"target": str(req.H), "t": req.t, "m": b.m, "l": b.l, "depth": recipe.depth,
                 "recipe": recipe.expression.to_json()}

    refs = reference_flow_many(req.H, req.t, req.region, b.reference_steps)
    lookup = {id(p): q for p, q in zip(req.region, refs)}

    def ref(p):
        return lookup[id(p)]

    if req.threads > 1:
        with ThreadPoolExecutor(req.threads) as ex:
            report = ck_seminorm(prog, ref, req.region, 0, executor=ex)
    else:
        report = ck_seminorm(prog, ref, req.region, 0)
    prog.meta["achieved_error"] = report.sup
    manifest = {
        "request": req.to_json(),
        "recipe": recipe.to_json(),
        "program": prog.to_json(),
        "report": report.to_json(),
        "target_met": bool(report.sup <= req.epsilon),
        "program_hash": digest(prog.to_json()),
        "region_hash": digest([hat_point_to_json(p) for p in req.region]),
    }
    result = ApproxResult(prog, report, recipe, manifest)
    if raise_on_miss and report.sup > req.epsilon:
        raise TargetMiss(f"achieved C^0 error {report.sup:.3e} exceeds epsilon {req.epsilon:.3e}",
                         program=prog, report=result)
    return result


# real-form preservation ---------------------------------------------------------

@dataclass
class RealFormReport:
    hermitian: float
    trace_imag: float
    tol: float = REAL_FORM_TOL

    @property
    def passed(self) -> bool:
        return self.hermitian < self.tol and self.trace_imag < self.tol

    def to_json(self):
        return {"hermitian_defect": self.hermitian, "trace_imag": self.trace_imag,
                "tol": self.tol, "passed": self.passed}


def verify_real_preservation(prog: FlowProgram, samples, tol=REAL_FORM_TOL) -> RealFormReport:
    """Largest Hermiticity defect and imaginary trace coordinate over transported samples.

    The trace part is relative to the size of the transported trace coordinates.
    """
    herm = imag = 0.0
    for p in samples:
        q = prog(p)
        herm = max(herm, hermitian_defect(q))
        coords = trace_embedding(q).values
        imag = max(imag, float(np.max(np.abs(coords.imag))) / max(1.0, float(np.max(np.abs(coords)))))
    return RealFormReport(herm, imag, tol)


# push-out ------------------------------------------------------------------------

@dataclass(frozen=True)
class StageSpec:
    j: int
    R: float
    S: float
    epsilon: float

    def to_json(self):
        return {"j": self.j, "R": self.R, "S": self.S, "epsilon": self.epsilon}


def check_stage_specs(specs) -> None:
    for k, s in enumerate(specs):
        if s.j != k + 1:
            raise StageRejected(f"stage {k + 1} carries index {s.j}", stage=k + 1)
        if not s.epsilon > 0:
            raise StageRejected(f"stage {s.j}: epsilon must be positive", stage=s.j, value=s.epsilon)
        if s.S < s.R + 1:
            raise StageRejected(f"stage {s.j}: S = {s.S} < R + 1 = {s.R + 1}", stage=s.j, value=s.S)
        if k + 1 < len(specs) and specs[k + 1].R != s.S + 1:
            raise StageRejected(f"stage {s.j + 1}: R = {specs[k + 1].R} differs from S_{s.j} + 1",
                                stage=s.j + 1, value=specs[k + 1].R)


@dataclass
class PushOutResult:
    program: FlowProgram
    stage_bounds: list   # per j: sup over Z_{R_j} of |Phi^(j+1) - Phi^(j)| against epsilon_{j+1}
    cauchy: list         # per k: sup over Z_{R_k} of |Phi^(J) - Phi^(k)| against the tail sum

    @property
    def passed(self) -> bool:
        return all(b["ok"] for b in self.stage_bounds) and all(c["ok"] for c in self.cauchy)

    def to_json(self):
        return {"program": self.program.to_json(), "stage_bounds": self.stage_bounds,
                "cauchy": self.cauchy, "passed": self.passed}


def _dist(p, q):
    return float(np.linalg.norm(p.as_vector() - q.as_vector()))


def push_out(stages, sampler) -> PushOutResult:
    """Compose ``(StageSpec, FlowProgram)`` stages left to right and verify the Cauchy bounds.

    ``sampler(R)`` returns the sample set standing in for ``Z_R``.  Stage
    ``j`` must move the image of ``Z_{R_{j-1}}`` under the previous stages by
    less than ``epsilon_j`` (stage 1 is measured on ``Z_{R_1}``); otherwise it
    is rejected.
    """
    specs = [s for s, _ in stages]
    progs = [p for _, p in stages]
    check_stage_specs(specs)
    for s, prog in stages:
        if not prog.is_real_time():
            raise StageRejected(f"stage {s.j}: program has non-real times", stage=s.j)

    regions = {s.j: list(sampler(s.R)) for s in specs}
    composite = FlowProgram([])
    bounds = []
    for k, (s, prog) in enumerate(stages):
        base = regions[specs[k - 1].j] if k > 0 else regions[s.j]
        before = [composite(p) for p in base]
        moved = max((_dist(prog(q), q) for q in before), default=0.0)
        if not moved < s.epsilon:
            raise StageRejected(f"stage {s.j}: deviation {moved:.3e} from identity is not below "
                                f"epsilon_{s.j} = {s.epsilon:.3e}", stage=s.j, value=moved)
        bounds.append({"j": s.j, "sup": moved, "epsilon": s.epsilon, "ok": True})
        composite = composite + prog

    partial = []
    acc = FlowProgram([])
    for prog in progs:
        acc = acc + prog
        partial.append(acc)
    cauchy = []
    for k, s in enumerate(specs):
        tail = float(sum(t.epsilon for t in specs[k + 1:]))
        pts = regions[s.j]
        sup = max((_dist(composite(p), partial[k](p)) for p in pts), default=0.0)
        cauchy.append({"k": s.j, "sup": sup, "tail": tail, "ok": sup <= tail})
    return PushOutResult(composite, bounds, cauchy)


def synthetic_stages(n, epsilons, R1=5.0, step=1e-3, seed=0):
    """Near-identity real stages of tiny generator steps with the induction radii."""
    rng = np.random.default_rng(seed)
    gens = list(Generator)
    out = []
    R = R1
    for j, eps in enumerate(epsilons, start=1):
        S = R + 1
        steps = [(gens[rng.integers(len(gens))], float(rng.uniform(-step, step))) for _ in range(6)]
        out.append((StageSpec(j, R, S, eps), FlowProgram(steps, {"stage": j})))
        R = S + 1
    return out


def composite_symplectic_defect(prog: FlowProgram, samples, h=1e-5) -> float:
    worst = 0.0
    for p in samples:
        J = fd_jacobian(prog, p, h)
        Om = omega_matrix(p.n)
        worst = max(worst, float(np.max(np.abs(J.T @ Om @ J - Om))))
    return worst
