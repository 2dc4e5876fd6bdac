"""Random problem instances shared by the property and acceptance tests."""
import numpy as np

from robound.classic import SmallGain
from robound.quadform import Definiteness, HermitianForm2, definiteness, direction_value, qc_eval
from robound.relations import FunctionRelation, LinearMap
from robound.space import COMPLEX, REAL, EuclideanSpace, TruncatedSignalSpace, WeightedSpace


def seminorm_frame(space):
    """``(T, r)`` with ``<x, y> = (T x)[:r]^* (T y)[:r]`` and ``T`` invertible."""
    if isinstance(space, WeightedSpace):
        lam, U = np.linalg.eigh(space.W)
        order = np.argsort(-lam)
        lam, U = lam[order], U[:, order]
        r = int(np.sum(lam > 1e-12 * max(1.0, lam[0])))
        d = np.concatenate([np.sqrt(lam[:r]), np.ones(len(lam) - r)])
        return np.diag(d) @ U.conj().T, r
    if isinstance(space, TruncatedSignalSpace):
        return np.eye(space.dim), space.horizon * space.channels
    return np.eye(space.dim), space.dim


def random_matrix(rng, n, m, complex_):
    A = rng.standard_normal((n, m))
    if complex_:
        A = A + 1j * rng.standard_normal((n, m))
    return A


def random_unitary(rng, n, complex_):
    Q, R = np.linalg.qr(random_matrix(rng, n, n, complex_))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def lift(space, core, rng):
    """Coordinate matrix acting as ``core`` on the seminorm part, null part mapped to null."""
    T, r = seminorm_frame(space)
    n = space.dim
    B = random_matrix(rng, n, n, space.is_complex) * 0.3
    B[:r, :r] = core
    B[:r, r:] = 0
    A = np.linalg.solve(T, B @ T)
    return A if space.is_complex else A.real


def random_scalar(rng, complex_, scale=1.0):
    z = scale * rng.standard_normal()
    return z + 1j * scale * rng.standard_normal() if complex_ else z


def random_space(rng, kind=None, field=None, min_rank=1):
    """Random space whose seminorm has rank at least ``min_rank``."""
    while True:
        space = _random_space(rng, kind, field)
        if seminorm_frame(space)[1] >= min_rank:
            return space


def _random_space(rng, kind=None, field=None):
    kind = kind or rng.choice(["euclidean", "weighted", "signal"])
    field = field or rng.choice([REAL, COMPLEX])
    dim = int(rng.integers(2, 6))
    if kind == "euclidean":
        return EuclideanSpace(dim, field)
    if kind == "weighted":
        rank = int(rng.integers(1, dim))
        Bm = random_matrix(rng, dim, rank, field == COMPLEX)
        return WeightedSpace(Bm @ Bm.conj().T, field)
    return TruncatedSignalSpace(int(rng.integers(1, dim + 1)), dim, field=field)


def radial_saturation(scale):
    def fn(x):
        n = np.linalg.norm(x)
        return scale * (x if n <= 1 else x / n)
    return FunctionRelation(fn, linear=False, name="radial_saturation")


def _form(rng, complex_):
    return HermitianForm2(rng.standard_normal() * 2, rng.standard_normal() * 2,
                          random_scalar(rng, complex_))


def sector_instance(rng, space):
    """Scalar-gain G and Phi with a random ``(M, N)`` split of a negative definite sum."""
    cx = space.is_complex
    _, r = seminorm_frame(space)
    while True:
        S = _form(rng, cx)
        if definiteness(S) is not Definiteness.NEG_DEF:
            continue
        M = _form(rng, cx)
        N = S - M
        for _ in range(200):
            a = random_scalar(rng, cx, 2.0)
            # QC on (a x, x) reduces to the scalar [conj(a); 1] form
            if N.m11 * abs(a) ** 2 + 2 * np.real(N.m12 * np.conj(a)) + N.m22 >= 1e-9:
                break
        else:
            continue
        for _ in range(200):
            b = random_scalar(rng, cx, 2.0)
            if direction_value(M, b) >= 1e-9:
                break
        else:
            continue
        G = LinearMap(lift(space, a * np.eye(r), rng))
        Phi = LinearMap(lift(space, b * np.eye(r), rng))
        return M, N, G, Phi


def gain_instance(rng, space, nonlinear_phi=False):
    """Small-gain pair with a unitary-times-gain G and a contractive Phi."""
    cx = space.is_complex
    _, r = seminorm_frame(space)
    gG = rng.uniform(0.1, 2.0)
    gP = rng.uniform(0.05, 0.95) / gG
    M, N = SmallGain(gG, gP).forms()
    G = LinearMap(lift(space, gG * rng.uniform(0.3, 1.0) * random_unitary(rng, r, cx), rng))
    if nonlinear_phi and isinstance(space, EuclideanSpace):
        Phi = radial_saturation(gP * rng.uniform(0.3, 1.0))
    else:
        Phi = LinearMap(lift(space, gP * rng.uniform(0.3, 1.0) * random_unitary(rng, r, cx), rng))
    return M, N, G, Phi


def random_sufficiency_instance(rng, space):
    pick = rng.integers(3)
    if pick == 0:
        return sector_instance(rng, space)
    return gain_instance(rng, space, nonlinear_phi=pick == 2)


def probes_for(space, rng, n=30):
    return list(space.basis()) + [space.random(rng) * 10 ** rng.uniform(-1, 1) for _ in range(n)]


ANCHOR_CASES = ("DegenerateNullNull", "VerticalLine", "ZeroMap", "AlignedScaling", "GeneralRotation")


def _null_vector(space, rng):
    nb = space.null_basis()
    if not len(nb):
        return space.zeros()
    c = rng.standard_normal(len(nb))
    if space.is_complex:
        c = c + 1j * rng.standard_normal(len(nb))
    return space.vector(c @ nb)


def random_anchor(rng, space, case):
    """``(M, e, y)`` with ``<(e, y), M (e, y)> >= 0`` landing in the requested case."""
    cx = space.is_complex
    while True:
        M = _form(rng, cx)
        if definiteness(M) is Definiteness.NEG_DEF:
            continue
        if case == "DegenerateNullNull":
            e, y = _null_vector(space, rng), _null_vector(space, rng)
        elif case == "VerticalLine":
            if M.m22 < 0:
                continue
            e, y = _null_vector(space, rng), space.random(rng)
        elif case == "ZeroMap":
            if M.m11 < 0:
                continue
            e, y = space.random(rng), _null_vector(space, rng)
        elif case == "AlignedScaling":
            c = random_scalar(rng, cx, 2.0)
            if direction_value(M, c) < 1e-9:
                continue
            e = space.random(rng)
            y = c * e + _null_vector(space, rng)
        else:
            e, y = space.random(rng), space.random(rng)
        if space.is_null(e) != (case in ANCHOR_CASES[:2]):
            continue
        if qc_eval(space, M, np.stack([e, y])) >= 1e-9 * (1 + M.fro) * (
                space.seminorm(e) ** 2 + space.seminorm(y) ** 2):
            return M, e, y
