"""
Hamiltonian flows of trace polynomials on matrix pairs.

Sign convention, used everywhere in the package::

    omega((E1, F1), (E2, F2)) = tr(E1 F2 - E2 F1)
    dX/dt = grad_Y H,   dY/dt = -grad_X H

so that ``omega(V_H, W) = dH(W)`` and ``{f, g} = omega(V_f, V_g)``.
With this choice ``{tr X, tr Y} = n``; ``CONVENTION_PIN`` records the n = 2 value.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BlowUp
from .phase import HatPoint, hat_involution
from .tracepoly import TracePolynomial

CONVENTION_PIN = 2.0  # {tr X, tr Y} at n = 2


class Generator(str, Enum):
    TrY = "TrY"
    TrY2 = "TrY2"
    TrX3 = "TrX3"
    TrX_sq = "TrX_sq"

    @property
    def hamiltonian(self) -> TracePolynomial:
        return GENERATOR_HAMILTONIANS[self]


GENERATOR_HAMILTONIANS = {
    Generator.TrY: TracePolynomial.trace("Y"),
    Generator.TrY2: TracePolynomial.trace("YY"),
    Generator.TrX3: TracePolynomial.trace("XXX"),
    Generator.TrX_sq: TracePolynomial.from_terms([(1.0, ["X", "X"])]),
}


@dataclass(frozen=True)
class TangentPair:
    dX: np.ndarray
    dY: np.ndarray

    def as_vector(self):
        return np.concatenate([self.dX.ravel(), self.dY.ravel()])


def cyclic_gradient(H: TracePolynomial, p: HatPoint) -> TangentPair:
    gx, gy = H.gradient(p.X, p.Y)
    return TangentPair(gx, gy)


def hamiltonian_field(H: TracePolynomial, p: HatPoint) -> TangentPair:
    gx, gy = H.gradient(p.X, p.Y)
    return TangentPair(gy, -gx)


def symplectic_form(a: TangentPair, b: TangentPair) -> complex:
    return complex(np.trace(a.dX @ b.dY - b.dX @ a.dY))


def poisson_bracket(H1: TracePolynomial, H2: TracePolynomial, p: HatPoint) -> complex:
    """``omega(V_H1, V_H2)`` at ``p``, i.e. ``tr(grad_X H1 grad_Y H2 - grad_Y H1 grad_X H2)``."""
    g1x, g1y = H1.gradient(p.X, p.Y)
    g2x, g2y = H2.gradient(p.X, p.Y)
    return complex(np.trace(g1x @ g2y - g1y @ g2x))


def generator_flow(gen, t, p: HatPoint) -> HatPoint:
    """Closed-form time-``t`` map of a generator; complete, so any complex ``t`` is allowed."""
    gen = Generator(gen)
    X, Y = p.X, p.Y
    n = p.n
    if gen is Generator.TrY:
        return p.replace(X + t * np.eye(n))
    if gen is Generator.TrY2:
        return p.replace(X + 2 * t * Y)
    if gen is Generator.TrX3:
        return p.replace(Y=Y - 3 * t * (X @ X))
    return p.replace(Y=Y - 2 * t * np.trace(X) * np.eye(n))


def _field_vec(H, vec, n):
    X = vec[: n * n].reshape(n, n)
    Y = vec[n * n:].reshape(n, n)
    gx, gy = H.gradient(X, Y)
    return np.concatenate([gy.ravel(), -gx.ravel()])


def reference_flow(H: TracePolynomial, t, p: HatPoint, steps: int = 1000,
                   trajectory: bool = False):
    """Classical fourth-order Runge-Kutta integration of the field of ``H``.

    With ``trajectory=True`` returns the list of ``steps + 1`` points.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = p.n
    h = t / steps
    y = p.as_vector()
    out = [p] if trajectory else None
    with np.errstate(over="ignore", invalid="ignore"):
        return _rk4_loop(H, y, h, steps, n, p.variant, out)


def _rk4_loop(H, y, h, steps, n, variant, out):
    # non-finite states are reported as BlowUp, so numpy overflow warnings are silenced
    for k in range(steps):
        k1 = _field_vec(H, y, n)
        k2 = _field_vec(H, y + 0.5 * h * k1, n)
        k3 = _field_vec(H, y + 0.5 * h * k2, n)
        k4 = _field_vec(H, y + h * k3, n)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUp(f"non-finite state at step {k + 1}", step=k + 1)
        if out is not None:
            out.append(HatPoint.from_vector(y, n, variant))
    if out is not None:
        return out
    return HatPoint.from_vector(y, n, variant)


def reference_flow_many(H: TracePolynomial, t, points, steps: int = 1000) -> list:
    """``reference_flow`` for a batch of same-size points, integrated together."""
    points = list(points)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not points:
        return []
    X = np.stack([p.X for p in points])
    Y = np.stack([p.Y for p in points])
    h = t / steps

    def field(X, Y):
        gx, gy = H.gradient(X, Y)
        return gy, -gx

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            a1, b1 = field(X, Y)
            a2, b2 = field(X + 0.5 * h * a1, Y + 0.5 * h * b1)
            a3, b3 = field(X + 0.5 * h * a2, Y + 0.5 * h * b2)
            a4, b4 = field(X + h * a3, Y + h * b3)
            X = X + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
            Y = Y + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
            if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
                raise BlowUp(f"non-finite state at step {k + 1}", step=k + 1)
    return [HatPoint(X[i], Y[i], p.variant) for i, p in enumerate(points)]


def fd_jacobian(fmap, p: HatPoint, h=1e-5) -> np.ndarray:
    """Central-difference Jacobian of ``fmap`` in entry coordinates ``(X, Y)``.

    Real steps suffice: the maps of interest are holomorphic.
    """
    x0 = p.as_vector()
    n = p.n
    dim = x0.size
    J = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[k] = h
        fp = fmap(HatPoint.from_vector(x0 + e, n, p.variant)).as_vector()
        fm = fmap(HatPoint.from_vector(x0 - e, n, p.variant)).as_vector()
        J[:, k] = (fp - fm) / (2 * h)
    return J


def omega_matrix(n: int) -> np.ndarray:
    """Matrix of ``omega`` in entry coordinates: ``X_jk`` pairs with ``Y_kj``."""
    N = n * n
    Om = np.zeros((2 * N, 2 * N))
    for j in range(n):
        for k in range(n):
            a = j * n + k
            b = N + k * n + j
            Om[a, b] = 1.0
            Om[b, a] = -1.0
    return Om


def symplectic_defect(fmap, p: HatPoint, h=1e-5) -> float:
    """``max |J^T Omega J - Omega|`` for the finite-difference Jacobian ``J``."""
    J = fd_jacobian(fmap, p, h)
    Om = omega_matrix(p.n)
    return float(np.max(np.abs(J.T @ Om @ J - Om)))


def tau_compat_defect(fmap, p: HatPoint) -> float:
    """Frobenius norm of ``fmap(tau p) - tau(fmap p)``."""
    a = fmap(hat_involution(p))
    b = hat_involution(fmap(p))
    return float(np.linalg.norm(a.as_vector() - b.as_vector()))
