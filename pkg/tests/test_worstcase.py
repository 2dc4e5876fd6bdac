import math

import numpy as np
import pytest

from robound.certify import DEFAULT_EPS_GRID, check_plant_constraint
from robound.errors import ConstructionCheckFailed, NotIndefinite
from robound.quadform import (
    Definiteness,
    HermitianForm2,
    definiteness,
    epsilon_family,
    factor_indefinite,
)
from robound.relations import LinearMap, ScaledIdentity
from robound.space import COMPLEX, EuclideanSpace
from robound.worstcase import CannotDefeat, construct_worst_case, defeat_gain, find_violating_xi

J = HermitianForm2.diag(1, -1)
R1 = EuclideanSpace(1)


def test_find_violating_xi_examples():
    hit = find_violating_xi(R1, ScaledIdentity(2), J, 0.1, [[1.0]])
    assert hit is not None and hit[2] == pytest.approx(-3.5)
    assert find_violating_xi(R1, ScaledIdentity(0.5), J, 0.1, [[1.0]]) is None
    assert find_violating_xi(R1, ScaledIdentity(2), J, 0.1, []) is None


def test_find_violating_xi_needs_indefinite_m():
    with pytest.raises(NotIndefinite):
        find_violating_xi(R1, ScaledIdentity(2), HermitianForm2.diag(1, 0), 0.1, [[1.0]])


def test_construction_oracle_values():
    res = construct_worst_case(R1, ScaledIdentity(2), J, 0.1, [1.0])
    w = res.witness
    assert (w.u2[0], w.u1[0], w.e2[0], w.y2[0]) == pytest.approx((0.2, 0.1, 2.2, 0.9), abs=1e-12)
    assert res.m_value == pytest.approx(4.03, abs=1e-10)
    assert res.achieved_ratio == pytest.approx(math.sqrt(96.2), abs=1e-10)
    assert res.guaranteed_ratio == pytest.approx(9.0, abs=1e-10)
    assert res.kappa == pytest.approx(1.0)
    assert w.flags == frozenset({"e1_sum", "e2_sum", "g_link"})


def test_construction_small_eps():
    res = construct_worst_case(R1, ScaledIdentity(2), J, 0.01, [1.0])
    assert res.guaranteed_ratio == pytest.approx(99)
    assert res.achieved_ratio >= 99


def test_construction_complex_passive_form(rng):
    C = EuclideanSpace(3, COMPLEX)
    M = HermitianForm2(0, 0, 0.5)
    xi = C.random_unit(rng)
    # G = -1 meets the N-constraint here (value 1 - eps), so the identity is the violator
    assert find_violating_xi(C, ScaledIdentity(-1), M, 0.1, [xi]) is None
    res = construct_worst_case(C, ScaledIdentity(1), M, 0.1, xi)
    assert res.n_value == pytest.approx(-1.1)
    assert res.m_value >= 0
    assert res.achieved_ratio >= res.guaranteed_ratio - 1e-9


def test_construction_rejects_non_violating_xi():
    with pytest.raises(ConstructionCheckFailed) as exc:
        construct_worst_case(R1, ScaledIdentity(0.5), J, 0.1, [1.0])
    assert exc.value.check == "n_violation"


def test_defeat_target_fifty():
    res = defeat_gain(R1, ScaledIdentity(2), J, 50, [[1.0]])
    assert res and res.eps <= 1 / 51
    assert res.achieved_ratio > 50


def test_defeat_contraction_fails():
    res = defeat_gain(R1, ScaledIdentity(0.5), J, 5, [[1.0]])
    assert isinstance(res, CannotDefeat) and not res
    assert res.probe_relative


def test_defeat_small_target_uses_large_eps():
    res = defeat_gain(R1, ScaledIdentity(2), J, 0.1, [[1.0]])
    assert res.eps == 0.5
    assert res.n_value == pytest.approx(-1.5 * 4 + 0.5)


@pytest.mark.parametrize("target", [1, 10, 1e2, 1e3, 1e4])
def test_defeat_reaches_targets(target):
    res = defeat_gain(R1, ScaledIdentity(2), J, target, [[1.0]])
    assert res and res.achieved_ratio > target


def test_defeat_random_probes_are_seeded():
    V = EuclideanSpace(3)
    G = LinearMap(np.diag([3.0, 0.1, 0.1]))
    a = defeat_gain(V, G, J, 20, [], n_random=10, seed=4)
    b = defeat_gain(V, G, J, 20, [], n_random=10, seed=4)
    assert a and b
    np.testing.assert_array_equal(a.xi_used, b.xi_used)


def random_indefinite(rng, cx):
    while True:
        m12 = rng.standard_normal() + (1j * rng.standard_normal() if cx else 0)
        M = HermitianForm2(rng.standard_normal(), rng.standard_normal(), m12)
        if definiteness(M) is Definiteness.INDEF:
            return M


@pytest.mark.parametrize("cx", [False, True])
def test_proof_chain_inequalities(rng, cx):
    V = EuclideanSpace(3, COMPLEX if cx else "real")
    done = 0
    while done < 100:
        M = random_indefinite(rng, cx)
        A = rng.standard_normal((3, 3)) * 3
        if cx:
            A = A + 1j * rng.standard_normal((3, 3))
        eps = 10 ** rng.uniform(-3, -0.05)
        hit = find_violating_xi(V, LinearMap(A), M, eps, [V.random_unit(rng) for _ in range(5)])
        if hit is None:
            continue
        res = construct_worst_case(V, LinearMap(A), M, eps, hit[0], hit[1])
        n = res.witness.norms(V)
        scale = 1 + res.P_norm_sq
        assert res.m_value >= res.penultimate_bound - 1e-9 * scale
        assert n["u"] <= eps * res.kappa * (n["y"] + n["u"]) + 1e-9 * (1 + n["y"])
        done += 1


def test_kappa_is_reported_from_factorization(rng):
    M = random_indefinite(rng, True)
    fac = factor_indefinite(M)
    V = EuclideanSpace(2, COMPLEX)
    res = defeat_gain(V, LinearMap(np.diag([50.0, 50.0])), M, 3, [V.basis()[0], V.basis()[1]])
    if res:
        assert res.kappa == pytest.approx(fac.kappa)


def test_defeat_implies_grid_check_fails():
    res = defeat_gain(R1, ScaledIdentity(2), J, 50, [[1.0]])
    for eps in DEFAULT_EPS_GRID:
        if eps >= res.eps:
            assert not check_plant_constraint(R1, ScaledIdentity(2), epsilon_family(J, eps), J, [[1.0]]).passed
