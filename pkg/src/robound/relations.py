"""Relations on a semi-inner product space and the feedback loop equations.

A relation is a subset of V x V.  Every backing answers two questions:
``apply(x)`` lists the images it can represent and ``contains(x, y)`` decides
membership.  Vector equality is always measured in the space seminorm, so two
vectors that differ by a seminorm-null vector are the same point.

Loop equations (positive feedback):

    e1_sum: e1 = u1 + y2      phi_link: y2 = Phi e2
    e2_sum: e2 = u2 + y1      g_link:   y1 = G e1
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._tol import get_tolerance
from .errors import AmbiguousImage, DomainViolation
from .space import Space

__all__ = [
    "Relation",
    "SampledGraph",
    "LinearMap",
    "ScaledIdentity",
    "StaticNonlinearity",
    "FunctionRelation",
    "VerticalLine",
    "NullNull",
    "Singleton",
    "Negated",
    "LoopWitness",
    "same_point",
    "is_linear_closed",
    "linearity_witness",
    "single_image",
    "evaluate_loop",
    "assemble_witness",
    "membership_uy",
    "closed_loop_witnesses",
]


def same_point(space: Space, a, b) -> bool:
    """``a`` and ``b`` are equal in the seminorm, up to tolerance."""
    a = space.vector(a)
    b = space.vector(b)
    scale = max(space.seminorm(a), space.seminorm(b))
    d = a - b
    return (space.seminorm(d) <= get_tolerance().bound(scale)
            or float(np.real(space._sip(d, d))) <= space.noise_floor(d))


class Relation:
    """Base class.  Subclasses must be immutable."""

    kind = "relation"
    #: every relation of this kind is linear
    linear = False
    #: single-valued with dom = V
    total_function = False

    def apply(self, space: Space, x) -> list[np.ndarray]:
        raise NotImplementedError

    def contains(self, space: Space, x, y) -> bool:
        return any(same_point(space, y, img) for img in self.apply(space, x))

    def in_domain(self, space: Space, x) -> bool:
        return bool(self.apply(space, x))

    def matrix(self, space: Space) -> np.ndarray | None:
        """Coordinate matrix for linear total functions, else ``None``."""
        return None

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class SampledGraph(Relation):
    """Finite list of (x, y) pairs; possibly multi-valued."""

    pairs: tuple
    kind = "sampled"

    def __init__(self, pairs):
        object.__setattr__(
            self, "pairs", tuple((np.array(x), np.array(y)) for x, y in pairs))

    def apply(self, space, x):
        x = space.vector(x)
        return [space.vector(y) for xi, y in self.pairs if same_point(space, x, xi)]

    def describe(self):
        return {"kind": self.kind, "size": len(self.pairs)}


@dataclass(frozen=True, eq=False)
class LinearMap(Relation):
    """``x -> A x`` in coordinates."""

    A: np.ndarray
    kind = "linear"
    linear = True
    total_function = True

    def __init__(self, A):
        A = np.array(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("LinearMap needs a square matrix")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    def apply(self, space, x):
        return [space.vector(self.A @ space.vector(x))]

    def matrix(self, space):
        return space._coerce(self.A, (space.dim, space.dim), "matrix")

    def describe(self):
        return {"kind": self.kind, "shape": list(self.A.shape)}


@dataclass(frozen=True)
class ScaledIdentity(Relation):
    scale: complex | float
    kind = "scaled_identity"
    linear = True
    total_function = True

    def apply(self, space, x):
        return [space.vector(self.scale * space.vector(x))]

    def matrix(self, space):
        return space._coerce(self.scale * np.eye(space.dim), (space.dim, space.dim), "matrix")

    def describe(self):
        s = complex(self.scale)
        return {"kind": self.kind, "scale": s.real if s.imag == 0 else [s.real, s.imag]}


def _saturate(v, level):
    mag = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(mag > level, level / np.where(mag == 0, 1, mag), 1.0)
    return v * f


def pointwise(name: str, params: dict):
    """Named pointwise maps shared with the signal-space operators."""
    if name == "saturation":
        level = float(params.get("level", 1.0))
        return lambda v: _saturate(v, level)
    if name == "deadzone":
        width = float(params.get("width", 1.0))
        return lambda v: v - _saturate(v, width)
    if name == "sector":
        # a v + (b - a) sat(v): v -> phi(v) / v stays inside [a, b]
        a, b = float(params["a"]), float(params["b"])
        return lambda v: a * v + (b - a) * _saturate(v, 1.0)
    if name == "gain":
        k = params.get("k", 1.0)
        return lambda v: k * v
    raise ValueError(f"unknown pointwise map {name!r}")


@dataclass(frozen=True)
class StaticNonlinearity(Relation):
    """Coordinatewise map: ``saturation``, ``deadzone``, ``sector`` or ``gain``."""

    name: str
    params: tuple = ()
    kind = "static"
    total_function = True

    def __init__(self, name, **params):
        pointwise(name, params)  # validate
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    @property
    def linear(self):
        if self.name == "gain":
            return True
        if self.name == "sector":
            p = dict(self.params)
            return float(p["a"]) == float(p["b"])
        return False

    def __call__(self, v):
        return pointwise(self.name, dict(self.params))(np.asarray(v))

    def apply(self, space, x):
        return [space.vector(self(space.vector(x)))]

    def describe(self):
        return {"kind": self.kind, "map": self.name, **dict(self.params)}


@dataclass(frozen=True, eq=False)
class FunctionRelation(Relation):
    """Graph of an arbitrary single-valued map with full domain."""

    fn: object
    linear: bool = False
    name: str = "function"
    kind = "function"
    total_function = True

    def apply(self, space, x):
        return [space.vector(self.fn(space.vector(x)))]

    def describe(self):
        return {"kind": self.kind, "name": self.name, "linear": self.linear}


@dataclass(frozen=True)
class VerticalLine(Relation):
    """``{(z, x) : ||z|| = 0}``: every null input maps to every vector."""

    kind = "vertical_line"
    linear = True

    def apply(self, space, x):
        # Image set is all of V; the canonical representatives are 0 and a basis.
        if not space.is_null(x):
            return []
        return [space.zeros(), *space.basis()]

    def contains(self, space, x, y):
        return space.is_null(x)


@dataclass(frozen=True)
class NullNull(Relation):
    """``{(z, x) : ||z|| = ||x|| = 0}``."""

    kind = "null_null"
    linear = True

    def apply(self, space, x):
        if not space.is_null(x):
            return []
        return [space.zeros(), *space.null_basis()]

    def contains(self, space, x, y):
        return space.is_null(x) and space.is_null(y)


@dataclass(frozen=True, eq=False)
class Singleton(Relation):
    """``{(e, y)}``."""

    e: np.ndarray
    y: np.ndarray
    kind = "singleton"

    def apply(self, space, x):
        return [space.vector(self.y)] if same_point(space, x, self.e) else []

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class Negated(Relation):
    """``{(x, -y) : (x, y) in R}``; the sign flip between loop conventions."""

    inner: Relation
    kind = "negated"

    @property
    def linear(self):
        return self.inner.linear

    @property
    def total_function(self):
        return self.inner.total_function

    def apply(self, space, x):
        return [-y for y in self.inner.apply(space, x)]

    def contains(self, space, x, y):
        return self.inner.contains(space, x, -space.vector(y))

    def matrix(self, space):
        A = self.inner.matrix(space)
        return None if A is None else -A

    def describe(self):
        return {"kind": self.kind, "inner": self.inner.describe()}


# -- linearity --------------------------------------------------------------


def _sample_pairs(space, R, rng, n):
    """Draw up to ``n`` pairs from the graph of ``R`` for closure testing."""
    if isinstance(R, SampledGraph):
        return [(space.vector(x), space.vector(y)) for x, y in R.pairs]
    if isinstance(R, Singleton):
        return [(space.vector(R.e), space.vector(R.y))]
    if isinstance(R, (VerticalLine, NullNull)):
        null = space.null_basis()
        pairs = []
        for _ in range(n):
            z = rng.standard_normal(len(null)) @ null if len(null) else space.zeros()
            if isinstance(R, VerticalLine):
                x = space.random(rng)
            else:
                x = rng.standard_normal(len(null)) @ null if len(null) else space.zeros()
            pairs.append((space.vector(z), space.vector(x)))
        return pairs
    pairs = []
    for _ in range(n):
        # random scale so saturation knees get crossed
        x = space.random(rng) * 10 ** rng.uniform(-1, 1.5)
        for y in R.apply(space, x):
            pairs.append((space.vector(x), y))
    return pairs


def _scalar(space, rng):
    a = rng.uniform(-3, 3)
    if space.is_complex:
        a = a + 1j * rng.uniform(-3, 3)
    return a


def linearity_witness(space: Space, R: Relation, trials: int = 100, rng_seed=0):
    """Search for ``(a1, p1, a2, p2)`` whose combination leaves the relation.

    Returns ``None`` when every trial combination stays inside ``R``.
    """
    rng = np.random.default_rng(rng_seed)
    pairs = _sample_pairs(space, R, rng, trials)
    if not pairs:
        return None
    for _ in range(trials):
        i, j = rng.integers(len(pairs), size=2)
        a1, a2 = _scalar(space, rng), _scalar(space, rng)
        (x1, y1), (x2, y2) = pairs[i], pairs[j]
        x = a1 * x1 + a2 * x2
        y = a1 * y1 + a2 * y2
        if not R.contains(space, x, y):
            return a1, pairs[i], a2, pairs[j]
    return None


def is_linear_closed(space: Space, R: Relation, trials: int = 100, rng_seed=0) -> bool:
    """Decide linearity by kind where known, else by randomized closure checks."""
    if isinstance(R, (LinearMap, ScaledIdentity, VerticalLine, NullNull)):
        return True
    if isinstance(R, Negated):
        return is_linear_closed(space, R.inner, trials, rng_seed)
    if isinstance(R, FunctionRelation) and R.linear:
        return True
    return linearity_witness(space, R, trials, rng_seed) is None


# -- loop equations ---------------------------------------------------------

EQUATIONS = ("e1_sum", "phi_link", "e2_sum", "g_link")


@dataclass(frozen=True, eq=False)
class LoopWitness:
    """Signals ``(u, y, e)`` plus the loop equations they were checked to satisfy."""

    u1: np.ndarray
    u2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    @property
    def u(self):
        return np.stack([self.u1, self.u2])

    @property
    def y(self):
        return np.stack([self.y1, self.y2])

    @property
    def e(self):
        return np.stack([self.e1, self.e2])

    def norms(self, space: Space) -> dict:
        return {
            "u": space.pair_seminorm(self.u),
            "y": space.pair_seminorm(self.y),
            "e": space.pair_seminorm(self.e),
        }

    def ratio(self, space: Space) -> float:
        """``||y|| / ||u||`` with ``inf`` for ``||u|| = 0 < ||y||``."""
        return _ratio(space.pair_seminorm(self.y), space.pair_seminorm(self.u))

    def residuals(self, space: Space) -> dict:
        """Seminorm residuals of the two signal-only equations ``e1_sum`` and ``e2_sum``."""
        return {
            "e1_sum": space.seminorm(self.e1 - self.u1 - self.y2),
            "e2_sum": space.seminorm(self.e2 - self.u2 - self.y1),
        }

    def with_flags(self, flags) -> LoopWitness:
        return LoopWitness(self.u1, self.u2, self.y1, self.y2, self.e1, self.e2,
                           frozenset(flags))


def _ratio(num: float, den: float) -> float:
    tol = get_tolerance()
    if den <= tol.atol:
        return 0.0 if num <= tol.atol else float("inf")
    return num / den


def evaluate_loop(space: Space, G: Relation | None, Phi: Relation | None,
                  u1, u2, y1, y2, e1, e2) -> LoopWitness:
    """Package signals and flag exactly the loop equations they satisfy."""
    u1, u2, y1, y2, e1, e2 = (space.vector(v) for v in (u1, u2, y1, y2, e1, e2))
    flags = set()
    if same_point(space, e1, u1 + y2):
        flags.add("e1_sum")
    if Phi is not None and Phi.contains(space, e2, y2):
        flags.add("phi_link")
    if same_point(space, e2, u2 + y1):
        flags.add("e2_sum")
    if G is not None and G.contains(space, e1, y1):
        flags.add("g_link")
    return LoopWitness(u1, u2, y1, y2, e1, e2, frozenset(flags))


def single_image(space: Space, R: Relation, x, name="relation") -> np.ndarray:
    images = R.apply(space, x)
    if not images:
        raise DomainViolation(f"input is outside dom({name})")
    if len(images) > 1:
        raise AmbiguousImage(f"{name} has {len(images)} images at this input; select one")
    return images[0]


def assemble_witness(space: Space, G: Relation, Phi: Relation | None, u1, u2, e1) -> LoopWitness:
    """Build ``y1 = G e1``, ``e2 = u2 + y1`` and ``y2``, then flag what holds.

    With ``Phi`` given, ``y2 = Phi e2``; without it, ``y2 = e1 - u1`` so that
    ``e1_sum``, ``e2_sum`` and ``g_link`` hold by construction.
    """
    u1, u2, e1 = space.vector(u1), space.vector(u2), space.vector(e1)
    y1 = single_image(space, G, e1, "G")
    e2 = u2 + y1
    if Phi is None:
        y2 = e1 - u1
    else:
        y2 = single_image(space, Phi, e2, "Phi")
    return evaluate_loop(space, G, Phi, u1, u2, y1, y2, e1, e2)


def membership_uy(space: Space, G: Relation, Phi: Relation, u, y) -> bool:
    """``(u, y) in R_uy``: the loop holds with ``e1 = u1 + y2``, ``e2 = u2 + y1``."""
    u = space.pair_vector(u)
    y = space.pair_vector(y)
    e1 = u[0] + y[1]
    e2 = u[1] + y[0]
    return G.contains(space, e1, y[0]) and Phi.contains(space, e2, y[1])


def closed_loop_witnesses(space: Space, G: Relation, Phi: Relation, u1, u2,
                          max_iter: int = 500) -> list[LoopWitness]:
    """Fully consistent loop solutions for input ``u`` (possibly none).

    Linear total functions are solved directly, sampled relations are
    enumerated, and other total functions go through fixed-point iteration on
    ``e1 = u1 + Phi(u2 + G e1)``.
    """
    u1, u2 = space.vector(u1), space.vector(u2)
    candidates = []
    A, B = G.matrix(space), Phi.matrix(space)
    if A is not None and B is not None:
        lhs = np.eye(space.dim) - B @ A
        rhs = u1 + B @ u2
        e1 = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        candidates.append(e1)
    elif not G.total_function and isinstance(G, (SampledGraph, Singleton)):
        pairs = G.pairs if isinstance(G, SampledGraph) else [(G.e, G.y)]
        for e1, y1 in pairs:
            e1, y1 = space.vector(e1), space.vector(y1)
            for y2 in Phi.apply(space, u2 + y1):
                candidates.append((e1, y1, y2))
    elif not Phi.total_function and isinstance(Phi, (SampledGraph, Singleton)):
        pairs = Phi.pairs if isinstance(Phi, SampledGraph) else [(Phi.e, Phi.y)]
        for _, y2 in pairs:
            y2 = space.vector(y2)
            e1 = u1 + y2
            for y1 in G.apply(space, e1):
                candidates.append((e1, y1, y2))
    elif G.total_function and Phi.total_function:
        e1 = u1.copy()
        for _ in range(max_iter):
            y1 = single_image(space, G, e1, "G")
            nxt = u1 + single_image(space, Phi, u2 + y1, "Phi")
            done = same_point(space, nxt, e1) and np.allclose(nxt, e1, rtol=1e-13, atol=1e-15)
            e1 = nxt
            if done:
                break
        if np.all(np.isfinite(e1)):
            candidates.append(e1)

    out = []
    for c in candidates:
        if isinstance(c, tuple):
            e1, y1, y2 = c
        else:
            e1 = c
            imgs = G.apply(space, e1)
            if len(imgs) != 1:
                continue
            y1 = imgs[0]
            imgs = Phi.apply(space, u2 + y1)
            if len(imgs) != 1:
                continue
            y2 = imgs[0]
        w = evaluate_loop(space, G, Phi, u1, u2, y1, y2, e1, u2 + y1)
        if w.flags == frozenset(EQUATIONS):
            out.append(w)
    return out
