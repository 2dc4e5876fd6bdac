import numpy as np
import pytest

from robound.certify import gain_bound
from robound.classic import (
    Circle,
    Convention,
    Passivity,
    SmallGain,
    certify_passivity,
    fit_passivity,
    loop_phi,
    passivity_value,
    to_MN,
)
from robound.errors import InadmissibleSpec
from robound.l2e import Delay, NegatedOperator, StateSpace, StaticNL, loop_space
from robound.quadform import Definiteness, HermitianForm2, qc_eval
from robound.relations import Negated, ScaledIdentity
from robound.space import EuclideanSpace


def test_passivity_mapping_oracle():
    rep = to_MN(Passivity(0.1, 1, 0.5, 0))
    np.testing.assert_array_equal(rep.N.matrix, [[-1, 0.5], [0.5, -0.1]])
    np.testing.assert_array_equal(rep.M.matrix, [[-0.5, -0.5], [-0.5, 0]])
    np.testing.assert_allclose((rep.M + rep.N).matrix, np.diag([-1.5, -0.1]))
    assert rep.definiteness is Definiteness.NEG_DEF
    assert rep.admissible and rep.warnings == ()


@pytest.mark.parametrize("spec", [Passivity(0.1, 1, -1, 0), Passivity(0, 1, 0.5, 0)])
def test_passivity_boundary_is_not_neg_def(spec):
    rep = to_MN(spec)
    assert not rep.admissible
    assert rep.definiteness is not Definiteness.NEG_DEF
    assert rep.warnings
    with pytest.raises(InadmissibleSpec):
        to_MN(spec, strict=True)


def test_passivity_soundness_random(rng):
    for _ in range(500):
        e1, d1, e2, d2 = rng.uniform(-1, 1, 4)
        rep = to_MN(Passivity(e1, d1, e2, d2))
        if rep.admissible:
            assert rep.neg_def
        # breaking exactly one inequality to equality
        b1 = to_MN(Passivity(e1, -e2, e2, d2))
        b2 = to_MN(Passivity(-d2, d1, e2, d2))
        assert not b1.neg_def and not b2.neg_def


def test_small_gain_normalization():
    assert to_MN(SmallGain(0.5, 1)).definiteness is Definiteness.NEG_DEF
    np.testing.assert_allclose((lambda r: (r.M + r.N).matrix)(to_MN(SmallGain(0.5, 1))),
                               np.diag([-1, -0.5]))
    assert gain_bound(*to_MN(SmallGain(0.5, 0.5))).gamma == pytest.approx(1.0, abs=1e-12)
    for gG, gP in [(0, 3), (3, 0), (0, 0)]:
        assert to_MN(SmallGain(gG, gP)).neg_def


def test_small_gain_iff_product_below_one(rng):
    for _ in range(500):
        gG, gP = rng.uniform(0, 3, 2)
        rep = to_MN(SmallGain(gG, gP))
        if abs(gG * gP - 1) > 1e-6:
            assert rep.neg_def == (gG * gP < 1)


def test_circle_unit_sector_matches_small_gain():
    M, _ = to_MN(Circle(-1, 1))
    assert M == HermitianForm2.diag(1, -1)
    for g in (0.3, 0.8, 2.0):
        Mc, Nc = to_MN(Circle(-g, g, N=HermitianForm2.diag(-1, 0.5)))
        Ms, _ = to_MN(SmallGain(0.5, g))
        # same sector up to positive scaling
        np.testing.assert_allclose(Mc.matrix, Ms.matrix)


def test_circle_finiteness_equivalence():
    for g in (0.3, 0.8):
        gamma_c = gain_bound(*to_MN(Circle(-g, g, N=SmallGain(1.0, g).forms()[1]))).gamma
        gamma_s = gain_bound(*to_MN(SmallGain(1.0, g))).gamma
        assert np.isfinite(gamma_c) and np.isfinite(gamma_s)


def test_circle_sector_encoding():
    # Phi(x) = k x lies in [a, b] exactly when the form is nonnegative
    V = EuclideanSpace(1)
    M, _ = to_MN(Circle(0.5, 2.0, convention=Convention.POSITIVE))
    for k, inside in [(1.0, True), (0.5, True), (2.0, True), (0.2, False), (3.0, False)]:
        v = qc_eval(V, M, np.array([[1.0], [k]]))
        assert (v >= -1e-12) == inside
    Mneg, _ = to_MN(Circle(0.5, 2.0))
    assert qc_eval(V, Mneg, np.array([[1.0], [-1.0]])) >= 0


def test_circle_requires_ordered_sector():
    assert not to_MN(Circle(1, -1)).admissible


def test_loop_phi_flips_for_negative_convention():
    spec = Passivity(0.1, 1, 0.5, 0)
    assert isinstance(loop_phi(spec, ScaledIdentity(1)), Negated)
    assert isinstance(loop_phi(spec, Delay(1)), NegatedOperator)
    pos = Passivity(0.1, 1, 0.5, 0, Convention.POSITIVE)
    phi = ScaledIdentity(1)
    assert loop_phi(pos, phi) is phi


def test_conventions_give_identical_forms():
    a = to_MN(Passivity(0.1, 1, 0.5, 0, Convention.NEGATIVE))
    b = to_MN(Passivity(0.1, 1, 0.5, 0, Convention.POSITIVE))
    assert a.M == b.M and a.N == b.N


def test_plant_inequality_equals_n_constraint(rng):
    G = StateSpace([[0.5]], [1], [1], 1.0)
    for _ in range(50):
        e1, d1 = rng.uniform(-1, 1, 2)
        _, N = to_MN(Passivity(e1, d1, 0.5, 0.5))
        xi = rng.standard_normal(20)
        space = loop_space(20)
        for T in (1, 7, 20):
            v = passivity_value(G, xi, T, e1, d1)
            z = np.stack([G.simulate(xi), xi])
            assert v == pytest.approx(qc_eval(space.with_horizon(T), N, z), rel=1e-10, abs=1e-10)


FILTER = StateSpace([[0.5]], [1], [1], 1.0)
SAT = StaticNL("saturation", level=1)


def probe_bank(rng, n=10, horizon=30):
    return [rng.standard_normal(horizon) * 3 for _ in range(n)]


def test_filter_and_saturation_certified(rng):
    probes = probe_bank(rng)
    T = range(1, 31)
    spec = fit_passivity(FILTER, SAT, probes, T)
    assert spec.eps1 > 0 and spec.delta1 > 0 and spec.delta2 > 0
    rep = certify_passivity(spec, FILTER, SAT, probes, T)
    assert not rep.violations and not rep.notes
    assert rep.stable and np.isfinite(rep.gamma) and rep.gamma > 0


def test_boundary_spec_gives_no_gamma(rng):
    probes = probe_bank(rng, n=3)
    rep = certify_passivity(Passivity(0, 0, 0, 0), FILTER, SAT, probes, [10])
    assert rep.gamma is None
    assert any("NegDef" in n for n in rep.notes)


def test_violations_are_listed(rng):
    probes = probe_bank(rng, n=3)
    rep = certify_passivity(Passivity(5, 0, 0, 1), FILTER, SAT, probes, [5, 10])
    assert rep.violations
    which, i, T, value = rep.violations[0]
    assert which == "G" and value < 0


def test_pre_negated_phi_matches_negative_convention(rng):
    probes = probe_bank(rng, n=4)
    T = [5, 15, 30]
    neg = certify_passivity(Passivity(0.1, 0.1, 0.1, 0.1), FILTER, SAT, probes, T)
    pos = certify_passivity(Passivity(0.1, 0.1, 0.1, 0.1, Convention.POSITIVE), FILTER,
                            NegatedOperator(SAT), probes, T)
    assert neg.mapping.M == pos.mapping.M and neg.mapping.N == pos.mapping.N
    assert neg.violations == pos.violations
    assert neg.gamma == pos.gamma
