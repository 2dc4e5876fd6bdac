"""Worst-case loop signals for a plant that fails the graph constraint.

With ``M = P^* J P`` indefinite, ``0 < eps < 1`` and ``N = -M - eps P^* P``,
pick a probe ``xi`` violating the N-constraint and set

    e1 = xi,  y1 = G xi,  (u2, -u1) = eps P^{-1} J P (y1, e1),
    e2 = y1 + u2,  y2 = e1 - u1.

These satisfy ``e1_sum``, ``e2_sum`` and ``g_link`` and the M-constraint on ``(e2, y2)``, and
``||y|| >= (1 - eps kappa) / (eps kappa) ||u||`` with
``kappa = ||P^{-1} J P||``.  Shrinking eps defeats any gain bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._tol import get_tolerance
from .certify import DEFAULT_EPS_GRID
from .errors import ConstructionCheckFailed, DomainViolation
from .quadform import HermitianForm2, factor_indefinite, is_nonneg_qc, qc_eval
from .relations import LoopWitness, Relation, evaluate_loop

__all__ = [
    "WorstCaseResult",
    "CannotDefeat",
    "find_violating_xi",
    "construct_worst_case",
    "defeat_gain",
]


@dataclass(frozen=True, eq=False)
class WorstCaseResult:
    witness: LoopWitness
    eps: float
    kappa: float
    guaranteed_ratio: float
    achieved_ratio: float
    xi_used: np.ndarray
    m_value: float          # <(e2, y2), M (e2, y2)>
    n_value: float          # <(G xi, xi), N (G xi, xi)>, negative
    P_norm_sq: float        # ||P (y1, e1)||^2 on V^2
    N_used: HermitianForm2

    @property
    def penultimate_bound(self) -> float:
        """``eps (1 - eps^2) ||P (y1, e1)||^2``, a lower bound for ``m_value``."""
        return self.eps * (1 - self.eps**2) * self.P_norm_sq

    def as_dict(self):
        return {
            "eps": self.eps,
            "kappa": self.kappa,
            "guaranteed_ratio": self.guaranteed_ratio,
            "achieved_ratio": self.achieved_ratio,
            "m_value": self.m_value,
            "n_value": self.n_value,
            "N": self.N_used.tolist(),
        }


@dataclass(frozen=True)
class CannotDefeat:
    """No probe violated the N-constraint at any useful grid point."""

    target_gamma: float
    eps_tried: tuple
    kappa: float
    probe_relative: bool = True

    def __bool__(self):
        return False


def _family(M, eps):
    fac = factor_indefinite(M)
    return fac, -M - eps * fac.PtP


def find_violating_xi(space, G: Relation, M: HermitianForm2, eps: float, probes):
    """First ``(xi, G xi, value)`` with a strictly negative N-constraint, else ``None``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _, N = _family(M, eps)
    for xi in probes:
        xi = space.vector(xi)
        images = G.apply(space, xi)
        if not images:
            raise DomainViolation("probe outside dom(G)")
        for img in images:
            z = np.stack([img, xi])
            v = qc_eval(space, N, z)
            if not is_nonneg_qc(v, space, N, z):
                return xi, img, v
    return None


def construct_worst_case(space, G: Relation, M: HermitianForm2, eps: float, xi,
                         y1=None) -> WorstCaseResult:
    """Build the worst-case signals from a violating ``xi`` and check all three items.

    ``y1`` selects an image of ``xi`` when ``G`` is multi-valued.
    """
    fac, N = _family(M, eps)
    e1 = space.vector(xi)
    if y1 is None:
        images = G.apply(space, e1)
        if not images:
            raise DomainViolation("xi outside dom(G)")
        y1 = images[0]
    y1 = space.vector(y1)
    base = np.stack([y1, e1])
    n_value = qc_eval(space, N, base)
    if n_value >= 0:
        raise ConstructionCheckFailed("xi does not violate the N-constraint", check="n_violation")

    shifted = space.pair_mat_apply(eps * fac.reflection, base)
    u2, u1 = shifted[0], -shifted[1]
    e2 = y1 + u2
    y2 = e1 - u1
    witness = evaluate_loop(space, G, None, u1, u2, y1, y2, e1, e2)

    tol = get_tolerance()
    if witness.flags != frozenset({"e1_sum", "e2_sum", "g_link"}):
        raise ConstructionCheckFailed(f"loop flags {sorted(witness.flags)}", check="loop_equations")
    z = np.stack([e2, y2])
    m_value = qc_eval(space, M, z)
    if not is_nonneg_qc(m_value, space, M, z):
        raise ConstructionCheckFailed(f"M-constraint on (e2, y2) is {m_value:.6g}", check="m_constraint")

    ek = eps * fac.kappa
    guaranteed = (1 - ek) / ek if ek < 1 else 0.0
    achieved = witness.ratio(space)
    if achieved < guaranteed - tol.bound(guaranteed):
        raise ConstructionCheckFailed(
            f"achieved ratio {achieved:.6g} below guaranteed {guaranteed:.6g}", check="ratio")
    P_norm_sq = space.pair_seminorm(space.pair_mat_apply(fac.P, base)) ** 2
    return WorstCaseResult(witness, eps, fac.kappa, guaranteed, achieved, e1,
                           m_value, n_value, P_norm_sq, N)


def defeat_gain(space, G: Relation, M: HermitianForm2, target_gamma: float, probes,
                eps_grid=DEFAULT_EPS_GRID, n_random: int = 0, seed=0):
    """Worst-case signals with ``||y|| > target_gamma ||u||``, or ``CannotDefeat``.

    Walks ``eps_grid`` in decreasing order, skipping points whose guaranteed
    ratio does not exceed the target.  ``n_random`` seeded unit vectors are
    appended to the probes (only meaningful when ``dom(G) = V``).
    """
    if target_gamma <= 0:
        raise ValueError("target_gamma must be positive")
    fac = factor_indefinite(M)
    probes = [space.vector(p) for p in probes]
    if n_random:
        rng = np.random.default_rng(seed)
        probes += [space.random_unit(rng) for _ in range(n_random)]
    tried = []
    for eps in sorted(eps_grid, reverse=True):
        ek = eps * fac.kappa
        if ek >= 1 or (1 - ek) / ek <= target_gamma:
            continue
        tried.append(eps)
        hit = find_violating_xi(space, G, M, eps, probes)
        if hit is None:
            # violations only shrink with eps; smaller grid points cannot succeed
            break
        xi, img, _ = hit
        res = construct_worst_case(space, G, M, eps, xi, img)
        if res.achieved_ratio > target_gamma:
            return res
    return CannotDefeat(target_gamma, tuple(tried), fac.kappa)

