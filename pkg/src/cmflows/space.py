"""
Coordinates and representatives on the Calogero-Moser space.

* trace coordinates ``tr X^j Y^k`` embedding the quotient in ``C^q``;
* the global chart ``(x_1 > ... > x_n, y_1, ..., y_n)`` of the real form;
* orbit normalization by minimizing ``||g . z||^2`` over ``g = exp(H)``, ``H`` Hermitian;
* the exhaustion ``rho`` and its sublevel sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartCollision, ChartDegeneracy, DomainError, NonConvergence, NotOnRealCM
from .phase import (SIGMA, TAU, HatPoint, HermitianTriple, PhasePoint, moment_map,
                    moment_real, mu_one, norm_sq, rank_one_defect)

SEPARATION_FLOOR = 1e-9
VARIETY_TOL = 1e-8
MOMENT_TOL = 1e-8


def trace_pairs(d: int) -> list[tuple[int, int]]:
    """All ``(j, k)`` with ``1 <= j + k <= d``, ordered by ``(j + k, j)``."""
    return [(j, s - j) for s in range(1, d + 1) for j in range(s + 1)]


def trace_count(d: int) -> int:
    return d * (d + 3) // 2


@dataclass(frozen=True)
class TraceCoords:
    n: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if vals.size != trace_count(self.d):
            raise ValueError(f"expected {trace_count(self.d)} values, got {vals.size}")
        object.__setattr__(self, "values", vals)

    @property
    def pairs(self):
        return trace_pairs(self.d)

    def __getitem__(self, jk):
        return self.values[self.pairs.index(tuple(jk))]

    def to_json(self):
        return {"n": self.n, "d": self.d, "pairs": [list(p) for p in self.pairs],
                "values": [[v.real, v.imag] for v in self.values]}

    @classmethod
    def from_json(cls, data):
        vals = [complex(a, b) for a, b in data["values"]]
        return cls(int(data["n"]), int(data["d"]), np.array(vals))


def trace_embedding(p: HatPoint, d: int | None = None) -> TraceCoords:
    n = p.n
    if d is None:
        d = n * n
    if d < 1:
        raise ValueError("degree cap must be >= 1")
    Xp = [np.eye(n, dtype=complex)]
    Yp = [np.eye(n, dtype=complex)]
    for _ in range(d):
        Xp.append(Xp[-1] @ p.X)
        Yp.append(Yp[-1] @ p.Y)
    # tr(A B) = sum(A * B^T)
    vals = [np.sum(Xp[j] * Yp[k].T) for j, k in trace_pairs(d)]
    return TraceCoords(n, d, np.array(vals))


def check_on_variety(p: HatPoint, tol=VARIETY_TOL) -> float:
    defect = rank_one_defect(p)
    if not defect < tol:
        raise DomainError(f"point is off the variety (rank-one defect {defect:.3e})", defect)
    return defect


def same_orbit(p: HatPoint, q: HatPoint, tol=1e-8, d=None) -> bool:
    check_on_variety(p, max(tol, VARIETY_TOL))
    check_on_variety(q, max(tol, VARIETY_TOL))
    ep = trace_embedding(p, d).values
    eq = trace_embedding(q, d).values
    return bool(np.max(np.abs(ep - eq)) < tol)


def is_real_form(p: HatPoint, tol=1e-8) -> bool:
    """True when all trace coordinates up to degree ``n^2`` are real within ``tol``.

    For the tau variant the real form is the Hermitian locus; for sigma it is the real locus.
    Both are cut out of the trace-coordinate image by realness.
    """
    check_on_variety(p)
    return real_form_violation(p) < tol


def real_form_violation(p: HatPoint, d=None) -> float:
    return float(np.max(np.abs(trace_embedding(p, d).values.imag)))


# charts -----------------------------------------------------------------

@dataclass(frozen=True)
class RealChart:
    x: np.ndarray
    y: np.ndarray
    floor: float = field(default=SEPARATION_FLOOR, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape or x.size == 0:
            raise ValueError("x and y must be non-empty and of equal length")
        gaps = x[:-1] - x[1:]
        if np.any(gaps <= self.floor):
            k = int(np.argmin(gaps))
            raise ChartCollision(
                f"x must be strictly decreasing with gaps > {self.floor:g}; "
                f"x[{k}] - x[{k + 1}] = {gaps[k]:.3e}", gaps[k])
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.size

    def to_json(self):
        return {"x": self.x.tolist(), "y": self.y.tolist()}


def chart_to_point(c: RealChart) -> HermitianTriple:
    """``A = diag(x)``, ``B_jj = y_j``, ``B_jk = -i / (x_j - x_k)``, ``a = (1, ..., 1)``."""
    x = c.x
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    B = -1j / diff
    np.fill_diagonal(B, c.y)
    return HermitianTriple(np.diag(x).astype(complex), B, np.ones(c.n, dtype=complex))


def chart_to_hat(c: RealChart) -> HatPoint:
    return chart_to_point(c).hat()


def sigma_chart_to_hat(c: RealChart) -> HatPoint:
    """Real pair on ``[X, Y] + I`` of rank one: ``X = diag(x)``, ``Y_jk = 1/(x_j - x_k)``.

    Here ``[X, Y] + I = 1 1^T``, the ``v w`` part being ``-1 1^T``.
    """
    x = c.x
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    Y = 1.0 / diff
    np.fill_diagonal(Y, c.y)
    return HatPoint(np.diag(x), Y, SIGMA)


def complex_chart_to_hat(x, y) -> HatPoint:
    """Point of the complex variety from distinct complex positions ``x``; generically off the real form."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    B = -1j / diff
    np.fill_diagonal(B, y)
    return HatPoint(np.diag(x), B, TAU)


def point_to_chart(h: HermitianTriple, tol=1e-8, floor=SEPARATION_FLOOR) -> RealChart:
    """Recover chart coordinates from a point of ``mu_R^{-1}(iI)``.

    Diagonalizes ``A`` unitarily (eigenvalues decreasing), then rephases so
    that ``a`` becomes the all-ones vector.
    """
    n = h.n
    defect = np.max(np.abs(moment_real(h) - 1j * np.eye(n)))
    scale = max(1.0, np.linalg.norm(h.A) * np.linalg.norm(h.B))
    if defect > tol * scale:
        raise DomainError(f"moment_real differs from iI by {defect:.3e}", defect)
    evals, U = np.linalg.eigh(h.A)
    order = np.argsort(evals)[::-1]
    evals, U = evals[order], U[:, order]
    gaps = evals[:-1] - evals[1:]
    if np.any(gaps <= floor):
        raise ChartDegeneracy(f"eigenvalue collision (gap {gaps.min():.3e})", gaps.min())
    a = U.conj().T @ h.a
    mod = np.abs(a)
    if np.max(np.abs(mod - 1.0)) > np.sqrt(tol):
        raise NotOnRealCM(f"|a_j| deviates from 1 by {np.max(np.abs(mod - 1.0)):.3e}")
    phase = a / mod
    # u = diag(conj(phase)) U^*
    Bt = U.conj().T @ h.B @ U
    Bt = (phase.conj()[:, None] * Bt) * phase[None, :]
    return RealChart(evals, np.real(np.diag(Bt)), floor)


def default_base_chart(n: int) -> RealChart:
    return RealChart(np.arange(n - 1, -n, -2, dtype=float), np.zeros(n))


# orbit normalization ------------------------------------------------------

@dataclass(frozen=True)
class NormalizeOptions:
    target: float = 1e-8
    max_iter: int = 500
    initial_step: float = 1e-1
    shrink: float = 0.5
    armijo: float = 1e-4
    moment_tol: float = 1e-6


@dataclass(frozen=True)
class NormalizeResult:
    point: PhasePoint
    g: np.ndarray
    iterations: int
    defect: float


def _exp_hermitian(H):
    lam, U = np.linalg.eigh(H)
    return (U * np.exp(lam)) @ U.conj().T, (U * np.exp(-lam)) @ U.conj().T


def _act(g, ginv, z: PhasePoint) -> PhasePoint:
    return PhasePoint(g @ z.X @ ginv, g @ z.Y @ ginv, g @ z.v, z.w @ ginv)


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Basis of Hermitian matrices, orthonormal for ``<H, K> = tr(H K)``."""
    out = []
    for j in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[j, j] = 1.0
        out.append(E)
    r = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[j, k] = E[k, j] = r
            out.append(E)
            F = np.zeros((n, n), dtype=complex)
            F[j, k], F[k, j] = -1j * r, 1j * r
            out.append(F)
    return out


def _grad(z):
    G = 4 * mu_one(z)
    return 0.5 * (G + G.conj().T)


def _coords(G, basis):
    return np.array([np.vdot(K, G).real for K in basis])


def _hessian(z, basis, eps):
    cols = []
    for K in basis:
        gp, gpi = _exp_hermitian(eps * K)
        gm, gmi = _exp_hermitian(-eps * K)
        d = _grad(_act(gp, gpi, z)) - _grad(_act(gm, gmi, z))
        cols.append(_coords(d, basis) / (2 * eps))
    Hs = np.array(cols).T
    return 0.5 * (Hs + Hs.T)


def orbit_normalize(z: PhasePoint, opts: NormalizeOptions = NormalizeOptions()) -> NormalizeResult:
    """Move ``z`` along its orbit to the minimum of ``||g . z||^2`` (where ``mu_1 = 0``).

    Works in Hermitian exponential coordinates ``g = exp(H)`` recentred at the
    current iterate.  The gradient at ``H = 0`` for ``<H, K> = tr(H K)`` is
    ``4 mu_1``; the Hessian is a central difference of that gradient along a
    Hermitian basis.  Newton directions are used whenever they descend, the
    negative gradient otherwise, with Armijo backtracking from
    ``initial_step`` (gradient) or 1 (Newton).  When the predicted decrease
    drops below the rounding level of ``||z||^2`` the merit becomes ``||mu_1||``.
    """
    n = z.n
    dev = np.max(np.abs(moment_map(z) - 1j * np.eye(n)))
    if dev > opts.moment_tol * max(1.0, norm_sq(z)):
        raise DomainError(f"moment map differs from iI by {dev:.3e}", dev)
    basis = hermitian_basis(n)
    g_total = np.eye(n, dtype=complex)
    cur = z
    f = norm_sq(cur)
    G = _grad(cur)
    defect = np.linalg.norm(G) / 4
    it = 0
    for it in range(opts.max_iter + 1):
        if defect < opts.target:
            return NormalizeResult(cur, g_total, it, float(defect))
        if it == opts.max_iter:
            break
        gvec = _coords(G, basis)
        hess = _hessian(cur, basis, 1e-4 / max(1.0, np.sqrt(f)))
        try:
            step_vec = -np.linalg.solve(hess, gvec)
            slope = float(step_vec @ gvec)
        except np.linalg.LinAlgError:
            slope = 0.0
        if slope < 0:
            D = sum(c * K for c, K in zip(step_vec, basis))
            s = 1.0
        else:
            D = -G
            slope = -float(gvec @ gvec)
            s = opts.initial_step
        # exponent kept inside a unit trust region
        s = min(s, 1.0 / max(np.linalg.norm(D), 1e-300))
        while True:
            g, ginv = _exp_hermitian(s * D)
            trial = _act(g, ginv, cur)
            ft = norm_sq(trial)
            Gt = _grad(trial)
            if -opts.armijo * s * slope > 1e-13 * f:
                ok = ft <= f + opts.armijo * s * slope
            else:
                ok = np.linalg.norm(Gt) < np.linalg.norm(G)
            if ok or s < 1e-12:
                break
            s *= opts.shrink
        if not ok:
            break
        cur, f, G = trial, ft, Gt
        g_total = g @ g_total
        defect = np.linalg.norm(G) / 4
    raise NonConvergence(
        f"orbit normalization did not reach {opts.target:g} (defect {defect:.3e})",
        best=NormalizeResult(cur, g_total, it, float(defect)), iterations=it, defect=float(defect))


# exhaustion -----------------------------------------------------------------

@dataclass(frozen=True)
class ExhaustionConfig:
    p0: TraceCoords
    R: float = 0.0
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        im = np.max(np.abs(self.p0.values.imag))
        if im > self.tol * max(1.0, np.max(np.abs(self.p0.values))):
            raise DomainError(f"base point is not on the real form (imag {im:.3e})", im)
        if self.R < 0:
            raise ValueError("R must be nonnegative")

    @classmethod
    def default(cls, n: int, R: float = 0.0, d: int | None = None) -> "ExhaustionConfig":
        p0 = trace_embedding(chart_to_hat(default_base_chart(n)), d)
        return cls(TraceCoords(p0.n, p0.d, p0.values.real.astype(complex)), R)

    def with_radius(self, R) -> "ExhaustionConfig":
        return ExhaustionConfig(self.p0, R, self.tol)


def exhaustion_rho(c: TraceCoords, cfg: ExhaustionConfig) -> float:
    """``||c - p0||^2 + ||conj(c) - p0||^2``; the involution acts on trace coordinates by conjugation."""
    if c.values.shape != cfg.p0.values.shape:
        raise ValueError("trace coordinates and base point differ in length")
    p0 = cfg.p0.values
    a = c.values - p0
    b = c.values.conj() - p0
    return float(np.vdot(a, a).real + np.vdot(b, b).real)


def in_sublevel(c: TraceCoords, cfg: ExhaustionConfig) -> bool:
    return exhaustion_rho(c, cfg) <= cfg.R


def rho_of_point(p: HatPoint, cfg: ExhaustionConfig) -> float:
    return exhaustion_rho(trace_embedding(p, cfg.p0.d), cfg)


# sampling -------------------------------------------------------------------

def sample_charts(n, count, rng, box=5.0, min_gap=0.5, max_tries=10_000) -> list[RealChart]:
    """Charts with ``x`` sorted in ``[-box, box]`` (gaps >= ``min_gap``) and ``y`` in ``[-box, box]``."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries * max(count, 1):
            raise RuntimeError("could not draw well-separated charts; widen the box")
        x = np.sort(rng.uniform(-box, box, n))[::-1]
        if n > 1 and np.min(x[:-1] - x[1:]) < min_gap:
            continue
        out.append(RealChart(x, rng.uniform(-box, box, n)))
    return out


def sample_sublevel(cfg: ExhaustionConfig, count, rng, real=True, max_tries=200_000) -> list[HatPoint]:
    """Rejection samples of ``Z_R`` (``real=False``) or of its real part (``real=True``).

    Proposals perturb the base chart; the proposal radius adapts to the acceptance rate.
    """
    n = cfg.p0.n
    base = default_base_chart(n)
    radius = 1.0
    out = []
    accepted = tried = 0
    for _ in range(max_tries):
        dx = radius * rng.uniform(-1, 1, n)
        dy = radius * rng.uniform(-1, 1, n)
        x = base.x + dx
        y = base.y + dy
        if real:
            if n > 1 and np.min(x[:-1] - x[1:]) <= 1e-3:
                continue
            p = chart_to_hat(RealChart(x, y))
        else:
            x = x + 1j * radius * rng.uniform(-1, 1, n)
            y = y + 1j * radius * rng.uniform(-1, 1, n)
            if n > 1 and np.min(np.abs(x[:, None] - x[None, :]) + np.eye(n)) <= 1e-3:
                continue
            p = complex_chart_to_hat(x, y)
        tried += 1
        if rho_of_point(p, cfg) <= cfg.R:
            out.append(p)
            accepted += 1
            if len(out) == count:
                return out
        if tried % 50 == 0:
            rate = accepted / tried
            if rate < 0.05:
                radius *= 0.7
            elif rate > 0.5:
                radius *= 1.3
            accepted = tried = 0
    raise RuntimeError(f"could not draw {count} samples of Z_{cfg.R:g}")
