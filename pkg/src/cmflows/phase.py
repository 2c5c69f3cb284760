"""
Phase space of the Calogero-Moser system before reduction.

A point of the ambient space is a quadruple ``(X, Y, v, w)`` with ``X, Y``
complex ``n x n`` matrices, ``v`` a column vector and ``w`` a row vector.
Both vectors are stored as 1-d arrays of length ``n``; the column/row role
is implicit in the formulas.

All norms are Frobenius (matrices) or Euclidean (vectors).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidGroupElement, NonFinite, ShapeError

EQUIVARIANCE_TOL = 1e-10
ALGEBRAIC_TOL = 1e-12
HERMITIAN_TOL = 1e-10
DET_FLOOR = 1e-12

TAU = "tau"
SIGMA = "sigma"


def _as_matrix(a, name):
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name} has non-finite entries")
    return m


def _as_vector(a, n, name):
    x = np.array(a, dtype=complex).reshape(-1)
    if x.shape != (n,):
        raise ShapeError(f"{name} must have length {n}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{name} has non-finite entries")
    return x


@dataclass(frozen=True)
class PhasePoint:
    X: np.ndarray
    Y: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        n = X.shape[0]
        Y = _as_matrix(self.Y, "Y")
        if Y.shape != X.shape:
            raise ShapeError("X and Y must have the same size")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "v", _as_vector(self.v, n, "v"))
        object.__setattr__(self, "w", _as_vector(self.w, n, "w"))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def hat(self, variant=TAU) -> "HatPoint":
        return HatPoint(self.X, self.Y, variant)


@dataclass(frozen=True)
class HatPoint:
    """A matrix pair ``(X, Y)``; ``variant`` selects the rank condition and involution."""

    X: np.ndarray
    Y: np.ndarray
    variant: str = TAU

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        Y = _as_matrix(self.Y, "Y")
        if Y.shape != X.shape:
            raise ShapeError("X and Y must have the same size")
        if self.variant not in (TAU, SIGMA):
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def replace(self, X=None, Y=None) -> "HatPoint":
        return HatPoint(self.X if X is None else X, self.Y if Y is None else Y, self.variant)

    def as_vector(self) -> np.ndarray:
        """Entry coordinates: X row-major, then Y row-major."""
        return np.concatenate([self.X.ravel(), self.Y.ravel()])

    @classmethod
    def from_vector(cls, vec, n, variant=TAU) -> "HatPoint":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec[: n * n].reshape(n, n), vec[n * n:].reshape(n, n), variant)


@dataclass(frozen=True)
class HermitianTriple:
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    tol: float = field(default=HERMITIAN_TOL, compare=False)

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        if A.shape != B.shape:
            raise ShapeError("A and B must have the same size")
        for name, M in (("A", A), ("B", B)):
            defect = np.linalg.norm(M - M.conj().T)
            if defect > self.tol * max(1.0, np.linalg.norm(M)):
                raise DomainError(f"{name} is not Hermitian (defect {defect:.3e})", defect)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "a", _as_vector(self.a, A.shape[0], "a"))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def to_phase_point(self) -> PhasePoint:
        """Embed as the fixed point ``(A, B, a, i a*)`` of the involution ``tau``."""
        return PhasePoint(self.A, self.B, self.a, 1j * self.a.conj())

    def hat(self) -> HatPoint:
        return HatPoint(self.A, self.B, TAU)


def check_group_element(g, floor=DET_FLOOR) -> np.ndarray:
    g = _as_matrix(g, "g")
    n = g.shape[0]
    det = abs(np.linalg.det(g))
    if not det > floor * np.linalg.norm(g) ** n:
        raise InvalidGroupElement(f"group element is singular (|det| = {det:.3e})")
    return g


def group_act(g, z: PhasePoint) -> PhasePoint:
    """``g . (X, Y, v, w) = (g X g^-1, g Y g^-1, g v, w g^-1)``."""
    g = check_group_element(g)
    if g.shape[0] != z.n:
        raise ShapeError("group element and point have different sizes")
    ginv = np.linalg.inv(g)
    return PhasePoint(g @ z.X @ ginv, g @ z.Y @ ginv, g @ z.v, z.w @ ginv)


def conjugate_pair(g, p: HatPoint) -> HatPoint:
    g = check_group_element(g)
    ginv = np.linalg.inv(g)
    return p.replace(g @ p.X @ ginv, g @ p.Y @ ginv)


def commutator(A, B):
    return A @ B - B @ A


def moment_map(z: PhasePoint) -> np.ndarray:
    return commutator(z.X, z.Y) + np.outer(z.v, z.w)


def moment_real(h: HermitianTriple) -> np.ndarray:
    return commutator(h.A, h.B) + 1j * np.outer(h.a, h.a.conj())


def mu_one(z: PhasePoint) -> np.ndarray:
    """Hermitian moment map of the unitary action: half of
    ``[X,X*] + [Y,Y*] + v v* - w* w``."""
    X, Y = z.X, z.Y
    M = (commutator(X, X.conj().T) + commutator(Y, Y.conj().T)
         + np.outer(z.v, z.v.conj()) - np.outer(z.w.conj(), z.w))
    return 0.5 * M


def tau(z: PhasePoint) -> PhasePoint:
    return PhasePoint(z.X.conj().T, z.Y.conj().T, 1j * z.w.conj(), 1j * z.v.conj())


def sigma(z: PhasePoint) -> PhasePoint:
    return PhasePoint(z.X.conj(), z.Y.conj(), z.v.conj(), z.w.conj())


def hat_involution(p: HatPoint) -> HatPoint:
    """``(X*, Y*)`` for the tau variant, entrywise conjugation for sigma."""
    if p.variant == SIGMA:
        return p.replace(p.X.conj(), p.Y.conj())
    return p.replace(p.X.conj().T, p.Y.conj().T)


def norm_sq(z: PhasePoint) -> float:
    return float(sum(np.vdot(a, a).real for a in (z.X, z.Y, z.v, z.w)))


def rank_one_defect(p: HatPoint) -> float:
    """Second singular value of ``[X,Y] - iI`` (tau) or ``[X,Y] + I`` (sigma).

    For ``n = 1`` the rank condition is vacuous and ``|s_1 - 1|`` is returned instead.
    """
    n = p.n
    shift = -1j if p.variant == TAU else 1.0
    M = commutator(p.X, p.Y) + shift * np.eye(n)
    s = np.linalg.svd(M, compute_uv=False)
    if n == 1:
        return float(abs(s[0] - 1.0))
    return float(s[1])


def hermitian_defect(p: HatPoint) -> float:
    """Largest entry of ``|X - X*|`` and ``|Y - Y*|``."""
    return float(max(np.max(np.abs(p.X - p.X.conj().T)), np.max(np.abs(p.Y - p.Y.conj().T))))


def random_unitary(n, rng) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_group_element(n, rng, cond=None) -> np.ndarray:
    """Random element of GL_n(C); with ``cond`` the 2-norm condition number is exactly ``cond``."""
    if cond is None:
        return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 2 * np.eye(n)
    U, V = random_unitary(n, rng), random_unitary(n, rng)
    if n == 1:
        s = np.array([1.0])
    else:
        s = np.exp(np.linspace(0.0, -np.log(cond), n))
        s[1:-1] = np.exp(rng.uniform(-np.log(cond), 0.0, n - 2))
    return (U * s) @ V


def random_phase_point(n, rng) -> PhasePoint:
    def c(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return PhasePoint(c(n, n), c(n, n), c(n), c(n))
