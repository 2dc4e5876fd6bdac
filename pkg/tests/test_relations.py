import numpy as np
import pytest

from robound.errors import AmbiguousImage, DomainViolation
from robound.relations import (
    FunctionRelation,
    LinearMap,
    LoopWitness,
    Negated,
    NullNull,
    SampledGraph,
    ScaledIdentity,
    Singleton,
    StaticNonlinearity,
    VerticalLine,
    assemble_witness,
    closed_loop_witnesses,
    evaluate_loop,
    is_linear_closed,
    linearity_witness,
    membership_uy,
    single_image,
)
from robound.space import COMPLEX, EuclideanSpace, WeightedSpace

R3 = EuclideanSpace(3)


def test_scaled_identity_apply(rng):
    x = R3.random(rng)
    (img,) = ScaledIdentity(2).apply(R3, x)
    np.testing.assert_allclose(img, 2 * x)


def test_sampled_graph_is_multivalued():
    a, p, q = np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])
    G = SampledGraph([(a, p), (a, q)])
    imgs = G.apply(R3, a)
    assert len(imgs) == 2
    assert G.apply(R3, p) == []
    with pytest.raises(AmbiguousImage):
        single_image(R3, G, a)
    with pytest.raises(DomainViolation):
        single_image(R3, G, p)


def test_saturation_pointwise():
    V = EuclideanSpace(2)
    (img,) = StaticNonlinearity("saturation", level=1).apply(V, [2, -0.5])
    np.testing.assert_allclose(img, [1, -0.5])


def test_sector_and_deadzone_maps():
    V = EuclideanSpace(3)
    x = np.array([3.0, 0.5, -2.0])
    (dz,) = StaticNonlinearity("deadzone", width=1).apply(V, x)
    np.testing.assert_allclose(dz, [2, 0, -1])
    (sec,) = StaticNonlinearity("sector", a=0.5, b=1.0).apply(V, x)
    # slope b inside the knee, a outside
    np.testing.assert_allclose(sec, [0.5 * 3 + 0.5, 0.5, -1.0 - 0.5])


def test_unknown_pointwise_map_rejected():
    with pytest.raises(ValueError):
        StaticNonlinearity("cubic")


def test_linear_closed_by_kind(rng):
    assert is_linear_closed(R3, LinearMap(rng.standard_normal((3, 3))))
    assert is_linear_closed(R3, ScaledIdentity(-2))
    assert is_linear_closed(R3, StaticNonlinearity("gain", k=3))


@pytest.mark.parametrize("name, params", [("saturation", {"level": 1}), ("deadzone", {"width": 1})])
def test_nonlinear_maps_have_witnesses(name, params):
    R = StaticNonlinearity(name, **params)
    assert linearity_witness(R3, R, trials=100) is not None
    assert not is_linear_closed(R3, R)


def test_vertical_line_on_singular_weighted_space_is_linear():
    W = WeightedSpace(np.diag([1.0, 0.0]))
    assert linearity_witness(W, VerticalLine(), trials=100) is None
    assert VerticalLine().contains(W, [0, 3], [5, 5])
    assert not VerticalLine().contains(W, [1, 0], [0, 0])
    assert NullNull().contains(W, [0, 1], [0, -4])
    assert not NullNull().contains(W, [0, 1], [1, 0])


def test_sampled_graph_closure_detects_nonlinearity():
    G = SampledGraph([(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))])
    assert not is_linear_closed(R3, G)


def test_linear_random_matrices_always_closed(rng):
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        R = FunctionRelation(lambda x, A=A: A @ x, linear=False)
        assert linearity_witness(R3, R, trials=50) is None


def test_negated_relation(rng):
    A = rng.standard_normal((3, 3))
    x = R3.random(rng)
    R = Negated(LinearMap(A))
    np.testing.assert_allclose(R.apply(R3, x)[0], -A @ x)
    np.testing.assert_allclose(R.matrix(R3), -A)
    assert R.contains(R3, x, -A @ x)


def test_assemble_identity_zero_loop_flags(rng):
    # e1 = x with u = 0 and Phi = 0 gives y2 = 0, so e1 = u1 + y2 fails unless x = 0
    x = R3.random_unit(rng)
    z = R3.zeros()
    w = assemble_witness(R3, ScaledIdentity(1), ScaledIdentity(0), z, z, x)
    assert w.flags == frozenset({"phi_link", "e2_sum", "g_link"})
    np.testing.assert_allclose(w.y1, x)
    np.testing.assert_allclose(w.y2, 0)
    np.testing.assert_allclose(w.e2, x)
    w0 = assemble_witness(R3, ScaledIdentity(1), ScaledIdentity(0), z, z, z)
    assert w0.flags == frozenset({"e1_sum", "phi_link", "e2_sum", "g_link"})


def test_assemble_without_phi_flags_three_equations(rng):
    A = rng.standard_normal((3, 3))
    w = assemble_witness(R3, LinearMap(A), None, R3.random(rng), R3.random(rng), R3.random(rng))
    assert w.flags == frozenset({"e1_sum", "e2_sum", "g_link"})
    assert max(w.residuals(R3).values()) <= 1e-10


def test_assembled_witness_residuals(any_space, rng):
    V = any_space
    A = rng.standard_normal((V.dim, V.dim))
    if V.is_complex:
        A = A + 1j * rng.standard_normal((V.dim, V.dim))
    for _ in range(20):
        w = assemble_witness(V, LinearMap(A), ScaledIdentity(0.3), V.random(rng), V.random(rng), V.random(rng))
        for k, r in w.residuals(V).items():
            if k in w.flags:
                assert r <= 1e-10


def test_membership_uy(rng):
    G, Phi = ScaledIdentity(0.5), ScaledIdentity(0.5)
    (w,) = closed_loop_witnesses(R3, G, Phi, R3.random(rng), R3.random(rng))
    assert w.flags == frozenset({"e1_sum", "phi_link", "e2_sum", "g_link"})
    assert membership_uy(R3, G, Phi, w.u, w.y)
    assert membership_uy(R3, G, Phi, 3 * w.u, 3 * w.y)
    bumped = w.y.copy()
    bumped[0] = bumped[0] + np.array([1.0, 0, 0])
    assert not membership_uy(R3, G, Phi, w.u, bumped)


def test_membership_ignores_null_perturbations(rng):
    W = WeightedSpace(np.diag([1.0, 1.0, 0.0]))
    G, Phi = ScaledIdentity(0.5), ScaledIdentity(0.5)
    (w,) = closed_loop_witnesses(W, G, Phi, W.random(rng), W.random(rng))
    bumped = w.y.copy()
    bumped[0] = bumped[0] + np.array([0, 0, 1.0])
    assert membership_uy(W, G, Phi, w.u, bumped)


def test_closed_loop_fixed_point_for_nonlinear(rng):
    G = StaticNonlinearity("saturation", level=1)
    Phi = ScaledIdentity(0.4)
    u1, u2 = R3.random(rng), R3.random(rng)
    (w,) = closed_loop_witnesses(R3, G, Phi, u1, u2)
    assert len(w.flags) == 4


def test_closed_loop_with_singleton_can_be_empty(rng):
    Phi = Singleton(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert closed_loop_witnesses(R3, ScaledIdentity(1), Phi, R3.zeros(), R3.zeros()) == []


def test_ratio_conventions():
    V = EuclideanSpace(1)
    z, o = np.zeros(1), np.ones(1)
    assert LoopWitness(z, z, z, z, z, z).ratio(V) == 0.0
    assert LoopWitness(z, z, o, z, z, z).ratio(V) == np.inf


def test_evaluate_loop_complex_space(rng):
    C = EuclideanSpace(2, COMPLEX)
    u1, u2 = C.random(rng), C.random(rng)
    G, Phi = ScaledIdentity(0.5j), ScaledIdentity(0.5)
    (w,) = closed_loop_witnesses(C, G, Phi, u1, u2)
    again = evaluate_loop(C, G, Phi, w.u1, w.u2, w.y1, w.y2, w.e1, w.e2)
    assert again.flags == w.flags == frozenset({"e1_sum", "phi_link", "e2_sum", "g_link"})
