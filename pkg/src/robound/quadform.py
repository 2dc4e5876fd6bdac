"""2x2 Hermitian forms acting on pairs of vectors.

A form ``A`` evaluates on ``xi = (xi1, xi2)`` as

    <xi, A xi> = A11 |xi1|^2 + 2 Re(A12 <xi1, xi2>) + A22 |xi2|^2,

which is how the constraints on G (with N) and on Phi (with M) are written.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._tol import get_tolerance
from .errors import NegDefInput, NotHermitian, NotIndefinite, NotNegDef

__all__ = [
    "HermitianForm2",
    "Definiteness",
    "IndefFactorization",
    "VERTICAL",
    "definiteness",
    "definiteness_threshold",
    "eigenvalues",
    "neg_def_margin",
    "factor_indefinite",
    "qc_eval",
    "nonneg_direction",
    "direction_value",
    "J",
    "epsilon_family",
    "is_nonneg_qc",
]

J = np.diag([1.0, -1.0])
J.setflags(write=False)


@dataclass(frozen=True)
class HermitianForm2:
    """Hermitian 2x2 matrix [[m11, m12], [conj(m12), m22]]."""

    m11: float
    m22: float
    m12: complex | float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "m11", float(self.m11))
        object.__setattr__(self, "m22", float(self.m22))
        m12 = complex(self.m12)
        object.__setattr__(self, "m12", m12.real if m12.imag == 0 else m12)

    @classmethod
    def from_matrix(cls, A, atol: float = 1e-12) -> HermitianForm2:
        A = np.asarray(A)
        if A.shape != (2, 2):
            raise NotHermitian(f"expected a 2x2 matrix, got shape {A.shape}")
        if abs(A[0, 0].imag) > atol or abs(A[1, 1].imag) > atol:
            raise NotHermitian("diagonal entries must be real")
        if abs(A[0, 1] - np.conj(A[1, 0])) > atol * max(1.0, abs(A[0, 1])):
            raise NotHermitian(f"off-diagonal entries {A[0, 1]} and {A[1, 0]} are not conjugate")
        return cls(A[0, 0].real, A[1, 1].real, A[0, 1])

    @classmethod
    def diag(cls, a, b) -> HermitianForm2:
        return cls(a, b, 0.0)

    @property
    def m21(self):
        return np.conj(self.m12)

    @property
    def is_complex(self) -> bool:
        return isinstance(self.m12, complex)

    @cached_property
    def matrix(self) -> np.ndarray:
        dtype = complex if self.is_complex else float
        A = np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=dtype)
        A.setflags(write=False)
        return A

    @property
    def fro(self) -> float:
        return float(np.sqrt(self.m11**2 + self.m22**2 + 2 * abs(self.m12) ** 2))

    def __add__(self, other):
        if not isinstance(other, HermitianForm2):
            return NotImplemented
        return HermitianForm2(self.m11 + other.m11, self.m22 + other.m22, self.m12 + other.m12)

    def __neg__(self):
        return HermitianForm2(-self.m11, -self.m22, -self.m12)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        c = float(c)
        return HermitianForm2(c * self.m11, c * self.m22, c * self.m12)

    __rmul__ = __mul__

    def tolist(self):
        def enc(z):
            z = complex(z)
            return [z.real, z.imag] if z.imag else z.real

        return [[self.m11, enc(self.m12)], [enc(self.m21), self.m22]]


def _as_form(A) -> HermitianForm2:
    return A if isinstance(A, HermitianForm2) else HermitianForm2.from_matrix(A)


class Definiteness(str, enum.Enum):
    NEG_DEF = "NegDef"
    NEG_SEMI = "NegSemi"
    INDEF = "Indef"
    POS_SEMI = "PosSemi"
    POS_DEF = "PosDef"


def eigenvalues(A) -> tuple[float, float]:
    """Closed-form eigenvalues (low, high) of a 2x2 Hermitian form."""
    A = _as_form(A)
    mid = 0.5 * (A.m11 + A.m22)
    rad = float(np.hypot(0.5 * (A.m11 - A.m22), abs(A.m12)))
    return mid - rad, mid + rad


def definiteness_threshold(A) -> float:
    return 1e-10 * (1.0 + _as_form(A).fro)


def definiteness(A) -> Definiteness:
    """Classify a form by the signs of its eigenvalues.

    An eigenvalue counts as negative/positive only beyond
    ``1e-10 * (1 + ||A||_F)``; the zero form is reported as PosSemi.
    """
    lo, hi = eigenvalues(A)
    th = definiteness_threshold(A)
    if hi < -th:
        return Definiteness.NEG_DEF
    if lo > th:
        return Definiteness.POS_DEF
    if lo < -th and hi > th:
        return Definiteness.INDEF
    if lo < -th:
        return Definiteness.NEG_SEMI
    return Definiteness.POS_SEMI


def neg_def_margin(A) -> float:
    """Largest eta with ``A <= -eta I`` (i.e. minus the top eigenvalue)."""
    ev = eigenvalues(A)
    if definiteness(A) is not Definiteness.NEG_DEF:
        raise NotNegDef(f"form is not negative definite (eigenvalues {ev})", ev)
    return -ev[1]


@dataclass(frozen=True)
class IndefFactorization:
    """``M = P^* J P`` with ``J = diag(1, -1)``."""

    P: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return J

    @cached_property
    def P_inv(self) -> np.ndarray:
        return np.linalg.inv(self.P)

    @cached_property
    def reflection(self) -> np.ndarray:
        """``P^{-1} J P``."""
        return self.P_inv @ J @ self.P

    @cached_property
    def kappa(self) -> float:
        return float(np.linalg.norm(self.reflection, 2))

    @cached_property
    def PtP(self) -> HermitianForm2:
        return HermitianForm2.from_matrix(self.P.conj().T @ self.P, atol=1e-9)

    def reconstruct(self) -> np.ndarray:
        return self.P.conj().T @ J @ self.P


def factor_indefinite(M) -> IndefFactorization:
    """Factor an indefinite form as ``P^* J P`` via its eigendecomposition."""
    M = _as_form(M)
    d = definiteness(M)
    if d is not Definiteness.INDEF:
        raise NotIndefinite(f"form is {d.value}, factorization needs an indefinite form")
    lam, U = np.linalg.eigh(M.matrix)
    # eigh sorts ascending: lam[0] < 0 < lam[1]
    U = U[:, [1, 0]]
    D = np.diag([np.sqrt(lam[1]), np.sqrt(-lam[0])])
    P = D @ U.conj().T
    P.setflags(write=False)
    return IndefFactorization(P)


def qc_eval(space, A, xi) -> float:
    """Real value of ``<xi, A xi>`` on V^2."""
    xi = space.pair_vector(xi)
    return float(np.real(space.pair_sip(xi, space.pair_mat_apply(A, xi))))


class _Vertical:
    """Marker: the only nonnegative direction of the form is (0, 1)."""

    def __repr__(self):
        return "VERTICAL"


VERTICAL = _Vertical()


def direction_value(M, eta) -> float:
    """``[1; eta]^* M [1; eta]``."""
    M = _as_form(M)
    return float(M.m11 + 2 * np.real(M.m12 * eta) + M.m22 * abs(eta) ** 2)


def nonneg_direction(M):
    """Some ``eta`` with ``[1; eta]^* M [1; eta] >= 0``, or ``VERTICAL``.

    Uses the eigenvector ``v`` of the top eigenvalue (``eta = v2 / v1``).  When
    that eigenvector is vertical but ``M22 > 0``, takes ``eta`` along the phase
    of ``conj(M12)`` with ``M22 |eta|^2 = 2 max(-M11, 0)``, which makes the
    quadratic positive.
    """
    M = _as_form(M)
    if definiteness(M) is Definiteness.NEG_DEF:
        raise NegDefInput("negative definite form has no nonnegative direction")
    th = definiteness_threshold(M)
    lam, U = np.linalg.eigh(M.matrix)
    v = U[:, 1]
    if abs(v[0]) > 1e-8:
        eta = v[1] / v[0]
        eta = eta if M.is_complex else float(np.real(eta))
        if direction_value(M, eta) >= -th * (1 + abs(eta) ** 2):
            return eta
    if M.m11 >= -th:
        return 0.0
    if M.m22 > th:
        t = np.sqrt(2 * max(-M.m11, 0.0) / M.m22)
        phase = np.conj(M.m12) / abs(M.m12) if abs(M.m12) > 0 else 1.0
        eta = t * phase
        return eta if M.is_complex else float(np.real(eta))
    if abs(M.m12) > th:
        phase = np.conj(M.m12) / abs(M.m12)
        eta = (1.0 - M.m11) / abs(M.m12) * phase
        eta = eta if M.is_complex else float(np.real(eta))
        if direction_value(M, eta) >= 0:
            return eta
    return VERTICAL


def epsilon_family(M, eps: float) -> HermitianForm2:
    """``N = -M - eps P^* P``; for semidefinite ``M`` this falls back to ``-M - eps I``."""
    M = _as_form(M)
    if definiteness(M) is Definiteness.INDEF:
        return -M - eps * factor_indefinite(M).PtP
    return -M - HermitianForm2.diag(eps, eps)


def is_nonneg_qc(value: float, space, A, xi) -> bool:
    """Tolerance-aware ``value >= 0`` with a scale from the form and the pair."""
    xi = space.pair_vector(xi)
    scale = _as_form(A).fro * (space.pair_seminorm(xi) ** 2)
    return get_tolerance().nonneg(value, scale)
