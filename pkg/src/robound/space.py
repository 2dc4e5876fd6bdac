"""Finite-dimensional semi-inner product spaces.

Vectors are plain 1-D numpy arrays; the space validates them and evaluates the
semi-inner product.  Elements of the augmented space V^2 ("pair vectors") are
arrays of shape ``(2, dim)``, so the overloaded 2x2 matrix action on V^2 is
just ``N @ xi``.

The semi-inner product is conjugate-linear in its first argument and linear in
its second.
"""
from __future__ import annotations

import numpy as np

from ._tol import get_tolerance
from .errors import SpaceMismatch

__all__ = [
    "Space",
    "EuclideanSpace",
    "WeightedSpace",
    "TruncatedSignalSpace",
    "REAL",
    "COMPLEX",
    "pair",
]

REAL = "real"
COMPLEX = "complex"


def pair(first, second) -> np.ndarray:
    """Stack two vectors into an element of V^2."""
    return np.stack([np.asarray(first), np.asarray(second)])


class Space:
    """Base class: subclasses implement ``_sip`` on validated arrays."""

    kind = "abstract"

    def __init__(self, dim: int, field: str = REAL):
        if field not in (REAL, COMPLEX):
            raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
        if dim < 0:
            raise ValueError("dim must be nonnegative")
        self.dim = int(dim)
        self.field = field

    @property
    def is_complex(self) -> bool:
        return self.field == COMPLEX

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def _key(self):
        return (self.dim, self.field)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, field={self.field!r})"

    # -- validation -----------------------------------------------------

    def _coerce(self, a, shape, what):
        a = np.asarray(a)
        if a.shape != shape:
            raise SpaceMismatch(f"{what} has shape {a.shape}, expected {shape} for {self!r}")
        if np.iscomplexobj(a) and not self.is_complex:
            if np.any(a.imag != 0):
                raise SpaceMismatch(f"complex {what} in a real space")
            a = a.real
        return a.astype(self.dtype, copy=False)

    def vector(self, x) -> np.ndarray:
        """Validate and coerce ``x`` to an element of this space."""
        return self._coerce(x, (self.dim,), "vector")

    def pair_vector(self, xi) -> np.ndarray:
        return self._coerce(xi, (2, self.dim), "pair vector")

    def matrix2(self, N) -> np.ndarray:
        """Coerce a 2x2 matrix (array or form) to this space's field."""
        A = np.asarray(getattr(N, "matrix", N))
        if A.shape != (2, 2):
            raise SpaceMismatch(f"expected a 2x2 matrix, got shape {A.shape}")
        if np.iscomplexobj(A) and not self.is_complex:
            if np.any(A.imag != 0):
                raise SpaceMismatch("complex matrix applied in a real space")
            A = A.real
        return A.astype(self.dtype, copy=False)

    # -- semi-inner product ---------------------------------------------

    def _sip(self, x, y):
        raise NotImplementedError

    def sip(self, x, y):
        """Semi-inner product <x, y>."""
        v = self._sip(self.vector(x), self.vector(y))
        return complex(v) if self.is_complex else float(np.real(v))

    def seminorm(self, x) -> float:
        x = self.vector(x)
        return float(np.sqrt(max(float(np.real(self._sip(x, x))), 0.0)))

    def gram(self, vectors) -> np.ndarray:
        """Gram matrix ``G[i, j] = <v_i, v_j>`` of a sequence of vectors."""
        V = [self.vector(v) for v in vectors]
        n = len(V)
        G = np.zeros((n, n), dtype=self.dtype)
        for i in range(n):
            for j in range(i, n):
                G[i, j] = self._sip(V[i], V[j])
                G[j, i] = np.conj(G[i, j])
        return G

    def noise_floor(self, x) -> float:
        """Rounding level of ``<x, x>`` itself; zero when it is a plain sum of squares."""
        return 0.0

    def resolved_seminorm(self, x) -> float:
        """Seminorm that reads as zero when ``<x, x>`` is below the rounding level."""
        x = self.vector(x)
        q = float(np.real(self._sip(x, x)))
        return 0.0 if q <= self.noise_floor(x) else float(np.sqrt(q))

    def is_null(self, x) -> bool:
        """True if ``x`` has zero seminorm (within tolerance of its coordinates)."""
        x = self.vector(x)
        q = float(np.real(self._sip(x, x)))
        return (q <= self.noise_floor(x)
                or self.seminorm(x) <= get_tolerance().bound(np.linalg.norm(x)))

    def null_basis(self) -> np.ndarray:
        """Rows span the seminorm-null subspace (shape ``(k, dim)``)."""
        return np.zeros((0, self.dim), dtype=self.dtype)

    # -- V^2 -------------------------------------------------------------

    def pair_sip(self, xi, zeta):
        """<xi, zeta> = <xi_1, zeta_1> + <xi_2, zeta_2> on V^2."""
        xi = self.pair_vector(xi)
        zeta = self.pair_vector(zeta)
        v = self._sip(xi[0], zeta[0]) + self._sip(xi[1], zeta[1])
        return complex(v) if self.is_complex else float(np.real(v))

    def pair_seminorm(self, xi) -> float:
        xi = self.pair_vector(xi)
        return float(np.sqrt(max(np.real(self.pair_sip(xi, xi)), 0.0)))

    def pair_mat_apply(self, N, xi) -> np.ndarray:
        """(N11 xi1 + N12 xi2, N21 xi1 + N22 xi2)."""
        return self.matrix2(N) @ self.pair_vector(xi)

    # -- sampling --------------------------------------------------------

    def random(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        if self.is_complex:
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        return rng.standard_normal(shape)

    def random_unit(self, rng: np.random.Generator) -> np.ndarray:
        """Random vector with unit seminorm."""
        for _ in range(100):
            x = self.random(rng)
            n = self.seminorm(x)
            if n > 1e-8:
                return x / n
        raise ValueError(f"{self!r} has no vectors of positive seminorm")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=self.dtype)

    def basis(self) -> np.ndarray:
        return np.eye(self.dim, dtype=self.dtype)


class EuclideanSpace(Space):
    kind = "euclidean"

    def _sip(self, x, y):
        return np.vdot(x, y)


class WeightedSpace(Space):
    """<x, y> = x^* W y for a PSD (possibly singular) Gram matrix W."""

    kind = "weighted"

    def __init__(self, gram, field: str = REAL):
        W = np.array(gram, dtype=complex if np.iscomplexobj(gram) else float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("gram must be a square matrix")
        if not np.allclose(W, W.conj().T, atol=1e-12):
            raise ValueError("gram must be Hermitian")
        if field == REAL and np.iscomplexobj(W):
            if np.any(W.imag != 0):
                raise ValueError("complex gram matrix in a real space")
            W = W.real
        lam = np.linalg.eigvalsh(W)
        if lam.size and lam[0] < -1e-10 * max(1.0, abs(lam[-1])):
            raise ValueError(f"gram must be PSD (min eigenvalue {lam[0]:.3g})")
        super().__init__(W.shape[0], field)
        W.setflags(write=False)
        self.W = W
        self._wnorm = float(abs(lam[-1])) if lam.size else 0.0

    def _key(self):
        return (self.dim, self.field, self.W.tobytes())

    def _sip(self, x, y):
        return np.vdot(x, self.W @ y)

    def noise_floor(self, x) -> float:
        # x^* W x cancels for null vectors, leaving ~eps ||W|| |x|^2 of noise;
        # matches the cutoff used by null_basis
        return 1e-12 * self._wnorm * float(np.vdot(x, x).real)

    def null_basis(self) -> np.ndarray:
        lam, U = np.linalg.eigh(self.W)
        cut = 1e-12 * max(1.0, abs(lam[-1])) if lam.size else 0.0
        return U[:, lam <= cut].T.astype(self.dtype)


class TruncatedSignalSpace(Space):
    """Signals of stored length ``length`` with the truncation semi-inner product.

    Only samples at times ``t < horizon`` contribute.  Multi-channel signals are
    stored time-major: sample ``t`` of channel ``c`` sits at ``t * channels + c``.
    """

    kind = "truncated"

    def __init__(self, horizon: int, length: int | None = None, channels: int = 1,
                 field: str = REAL):
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        length = horizon if length is None else int(length)
        if length < horizon:
            raise ValueError("stored length must cover the truncation horizon")
        self.horizon = int(horizon)
        self.length = length
        self.channels = int(channels)
        super().__init__(length * self.channels, field)

    def _key(self):
        return (self.dim, self.field, self.horizon, self.channels)

    def __repr__(self):
        return (f"TruncatedSignalSpace(horizon={self.horizon}, length={self.length}, "
                f"channels={self.channels}, field={self.field!r})")

    def with_horizon(self, horizon: int) -> TruncatedSignalSpace:
        return TruncatedSignalSpace(horizon, self.length, self.channels, self.field)

    def _sip(self, x, y):
        k = self.horizon * self.channels
        return np.vdot(x[:k], y[:k])

    def null_basis(self) -> np.ndarray:
        k = self.horizon * self.channels
        return np.eye(self.dim, dtype=self.dtype)[k:]
