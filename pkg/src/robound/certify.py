"""Sufficiency side: check the graph constraint on G and bound the loop gain.

If ``M + N < 0`` and every pair ``(G xi, xi)`` satisfies the N-constraint,
then every loop signal with ``(e2, y2)`` inside the M-constraint obeys
``||y|| <= gamma ||u||`` with

    gamma = (r + sqrt(r^2 + eta q)) / eta,

``eta`` the negative-definiteness margin of ``M + N`` and ``r``, ``q`` the
spectral norms of ``[[N12, M11], [N22, M21]]`` and ``diag(N22, M11)``.

Checks over a black-box relation can only look at finitely many probes, so
every pass here is relative to the probe set and says so.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tol import get_tolerance
from .errors import DomainViolation, MNNotNegDef, PhiViolatesQC, PreconditionNotMet
from .quadform import (
    Definiteness,
    HermitianForm2,
    definiteness,
    eigenvalues,
    epsilon_family,
    is_nonneg_qc,
    neg_def_margin,
    qc_eval,
)
from .relations import LoopWitness, Relation, closed_loop_witnesses

__all__ = [
    "DEFAULT_EPS_GRID",
    "GainBound",
    "ConditionResult",
    "Verdict",
    "ClosedLoopReport",
    "require_neg_def",
    "check_plant_constraint",
    "search_plant_constraint",
    "gain_bound",
    "verify_gain_bound",
    "verify_closed_loop",
    "e_form_gain",
    "verify_error_gain",
]

DEFAULT_EPS_GRID = tuple(2.0**-k for k in range(1, 21))


@dataclass(frozen=True)
class GainBound:
    eta: float
    r: float
    q: float
    gamma: float
    N_used: HermitianForm2

    def as_dict(self):
        return {"eta": self.eta, "r": self.r, "q": self.q, "gamma": self.gamma,
                "N": self.N_used.tolist()}


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of checking ``<(G xi, xi), N (G xi, xi)> >= 0`` on probes."""

    passed: bool
    N: HermitianForm2
    n_probes: int
    min_value: float
    xi: np.ndarray | None = None
    image: np.ndarray | None = None
    value: float | None = None
    eps: float | None = None
    probe_relative: bool = True

    @property
    def status(self) -> str:
        return "PASS (probe-relative)" if self.passed else "FAIL"


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    ratio: float
    bound: float

    def __bool__(self):
        return self.consistent


@dataclass
class ClosedLoopReport:
    gamma: float
    max_ratio: float
    n_inputs: int
    n_consistent: int
    ratios: list = field(default_factory=list)
    vacuous: bool = False

    @property
    def consistent(self) -> bool:
        tol = get_tolerance()
        return self.vacuous or self.max_ratio <= self.gamma + tol.bound(self.gamma)

    @property
    def status(self) -> str:
        if self.vacuous:
            return "vacuous: no consistent pairs"
        return "consistent" if self.consistent else "violated"


def require_neg_def(M: HermitianForm2, N: HermitianForm2) -> HermitianForm2:
    S = M + N
    if definiteness(S) is not Definiteness.NEG_DEF:
        ev = eigenvalues(S)
        raise MNNotNegDef(f"M + N is not negative definite (eigenvalues {ev[0]:.6g}, {ev[1]:.6g})", ev)
    return S


def check_plant_constraint(space, G: Relation, N: HermitianForm2, M: HermitianForm2,
                      probes) -> ConditionResult:
    """Evaluate the N-constraint on ``(G xi, xi)`` for every probe and image."""
    require_neg_def(M, N)
    min_value = math.inf
    for xi in probes:
        xi = space.vector(xi)
        images = G.apply(space, xi)
        if not images:
            raise DomainViolation("probe outside dom(G)")
        for img in images:
            z = np.stack([img, xi])
            v = qc_eval(space, N, z)
            min_value = min(min_value, v)
            if not is_nonneg_qc(v, space, N, z):
                return ConditionResult(False, N, len(probes), v, xi, img, v)
    return ConditionResult(True, N, len(probes), min_value)


def search_plant_constraint(space, G: Relation, M: HermitianForm2, probes,
                       eps_grid=DEFAULT_EPS_GRID) -> ConditionResult:
    """Scan ``N = -M - eps P^*P`` over ``eps_grid`` and return the first pass.

    On failure, returns the result at the last grid point.
    """
    result = None
    for eps in eps_grid:
        N = epsilon_family(M, eps)
        r = check_plant_constraint(space, G, N, M, probes)
        result = ConditionResult(**{**r.__dict__, "eps": eps})
        if r.passed:
            return result
    return result


def gain_bound(M: HermitianForm2, N: HermitianForm2) -> GainBound:
    require_neg_def(M, N)
    eta = neg_def_margin(M + N)
    R = np.array([[N.m12, M.m11], [N.m22, M.m21]])
    Q = np.array([[N.m22, 0.0], [0.0, M.m11]])
    r = float(np.linalg.norm(R, 2))
    q = float(np.linalg.norm(Q, 2))
    gamma = (r + math.sqrt(r * r + eta * q)) / eta
    return GainBound(eta, r, q, gamma, N)


def _check_gain_preconditions(space, M, witness: LoopWitness):
    missing = [f for f in ("e1_sum", "e2_sum", "g_link") if f not in witness.flags]
    z = np.stack([witness.e2, witness.y2])
    value = qc_eval(space, M, z)
    failed = list(missing)
    if not is_nonneg_qc(value, space, M, z):
        failed.append(f"M-constraint on (e2, y2) = {value:.6g}")
    if failed:
        raise PreconditionNotMet("witness does not meet the gain-bound hypotheses: "
                                 + ", ".join(failed), failed)


def _verdict(num: float, den: float, bound: float) -> Verdict:
    tol = get_tolerance()
    ok = num <= bound * den + tol.bound(bound * den)
    if den <= tol.atol:
        ratio = 0.0 if num <= tol.atol else math.inf
    else:
        ratio = num / den
    return Verdict(ok, ratio, bound)


def verify_gain_bound(space, M: HermitianForm2, witness: LoopWitness, gamma: float) -> Verdict:
    """Check ``||y|| <= gamma ||u||`` on a witness meeting ``e1_sum``, ``e2_sum`` and ``g_link`` and the M-constraint."""
    _check_gain_preconditions(space, M, witness)
    n = witness.norms(space)
    return _verdict(n["y"], n["u"], gamma)


def verify_closed_loop(space, M: HermitianForm2, G: Relation, Phi: Relation, probes,
                    u_list, N: HermitianForm2 | None = None,
                    eps_grid=DEFAULT_EPS_GRID) -> ClosedLoopReport:
    """Closed-loop gains over ``u_list`` against the certified gamma.

    ``Phi`` must satisfy the M-constraint on the probes.  Without ``N`` the
    epsilon family is searched on the same probes.
    """
    for xi in probes:
        xi = space.vector(xi)
        for img in Phi.apply(space, xi):
            z = np.stack([xi, img])
            v = qc_eval(space, M, z)
            if not is_nonneg_qc(v, space, M, z):
                raise PhiViolatesQC(f"Phi violates the M-constraint on a probe ({v:.6g})", xi, v)
    if N is None:
        cond = search_plant_constraint(space, G, M, probes, eps_grid)
        if not cond.passed:
            raise PreconditionNotMet("G fails the N-constraint on the probes for every eps",
                                     ["plant constraint"])
        N = cond.N
    gb = gain_bound(M, N)
    ratios = []
    n_consistent = 0
    for u1, u2 in u_list:
        for w in closed_loop_witnesses(space, G, Phi, u1, u2):
            n_consistent += 1
            ratios.append(w.ratio(space))
    return ClosedLoopReport(gb.gamma, max(ratios, default=0.0), len(u_list), n_consistent,
                         ratios, vacuous=n_consistent == 0)


def e_form_gain(gamma: float) -> float:
    """A valid e-form constant: ``e = u + swap(y)`` gives ``||e|| <= (1 + gamma) ||u||``."""
    return 1.0 + gamma


def verify_error_gain(space, M: HermitianForm2, witness: LoopWitness, gamma_bar: float) -> Verdict:
    """Check ``||e|| <= gamma_bar ||u||`` under the gain-bound hypotheses."""
    _check_gain_preconditions(space, M, witness)
    n = witness.norms(space)
    return _verdict(n["e"], n["u"], gamma_bar)
