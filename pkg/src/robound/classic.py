"""Classical stability statements translated into ``(M, N)`` pairs.

The toolkit's loop is positive feedback.  A classical negative-feedback
statement about ``Phi`` is handled by feeding ``-Phi`` into the loop; the
passivity and circle encodings below already describe that flipped element,
so a ``PositiveFeedback`` spec with a pre-negated ``Phi`` produces exactly the
same matrices as the ``NegativeFeedback`` spec with the original ``Phi``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._tol import get_tolerance
from .certify import GainBound, gain_bound
from .errors import InadmissibleSpec
from .l2e import CausalOperator, NegatedOperator, loop_space, truncated_norm, truncated_sip
from .quadform import Definiteness, HermitianForm2, definiteness, epsilon_family, qc_eval
from .relations import Negated, Relation

__all__ = [
    "Convention",
    "Passivity",
    "SmallGain",
    "Circle",
    "MappingReport",
    "to_MN",
    "loop_phi",
    "passivity_value",
    "fit_passivity",
    "PassivityReport",
    "certify_passivity",
]


class Convention(str, enum.Enum):
    POSITIVE = "PositiveFeedback"
    NEGATIVE = "NegativeFeedback"


@dataclass(frozen=True)
class Passivity:
    """``<x, Gx> >= eps1 |x|^2 + delta1 |Gx|^2`` and likewise for Phi with index 2.

    The indices always describe the negative-feedback ``Phi``.
    """

    eps1: float
    delta1: float
    eps2: float
    delta2: float
    convention: Convention = Convention.NEGATIVE

    def problems(self) -> list[str]:
        out = []
        if not self.delta1 + self.eps2 > 0:
            out.append(f"delta1 + eps2 = {self.delta1 + self.eps2:g} is not > 0")
        if not self.delta2 + self.eps1 > 0:
            out.append(f"delta2 + eps1 = {self.delta2 + self.eps1:g} is not > 0")
        return out

    def forms(self):
        N = HermitianForm2(-self.delta1, -self.eps1, 0.5)
        M = HermitianForm2(-self.eps2, -self.delta2, -0.5)
        return M, N


@dataclass(frozen=True)
class SmallGain:
    """``|G x| <= g_G |x|`` and ``|Phi x| <= g_Phi |x|``; sign-convention free."""

    g_G: float
    g_Phi: float
    convention: Convention = Convention.POSITIVE

    def problems(self) -> list[str]:
        out = []
        if self.g_G < 0 or self.g_Phi < 0:
            out.append("gains must be nonnegative")
        if not self.g_G * self.g_Phi < 1:
            out.append(f"g_G * g_Phi = {self.g_G * self.g_Phi:g} is not < 1")
        return out

    def forms(self):
        gG, gP = self.g_G, self.g_Phi
        # N is scaled so that M + N < 0 exactly when gG * gP < 1
        if gG == 0:
            c = gP**2 + 1
        elif gP == 0:
            c = 1 / (1 + gG**2)
        else:
            c = gP / gG
        M = HermitianForm2(gP**2, -1.0, 0.0)
        N = HermitianForm2(-c, c * gG**2, 0.0)
        return M, N


@dataclass(frozen=True)
class Circle:
    """``Phi`` in the sector ``[a, b]``; ``N`` for G given or taken from the eps family.

    Under ``NegativeFeedback`` the loop sees ``-Phi`` in ``[-b, -a]``.
    """

    a: float
    b: float
    N: HermitianForm2 | None = None
    eps: float = 0.01
    convention: Convention = Convention.NEGATIVE

    def problems(self) -> list[str]:
        return [] if self.a < self.b else [f"sector needs a < b, got [{self.a:g}, {self.b:g}]"]

    def forms(self):
        a, b = self.a, self.b
        if self.convention is Convention.NEGATIVE:
            a, b = -b, -a
        M = HermitianForm2(-a * b, -1.0, (a + b) / 2)
        N = self.N if self.N is not None else epsilon_family(M, self.eps)
        return M, N


@dataclass(frozen=True)
class MappingReport:
    M: HermitianForm2
    N: HermitianForm2
    definiteness: Definiteness
    admissible: bool
    warnings: tuple = ()

    def __iter__(self):
        return iter((self.M, self.N))

    @property
    def neg_def(self) -> bool:
        return self.definiteness is Definiteness.NEG_DEF

    def as_dict(self):
        return {"M": self.M.tolist(), "N": self.N.tolist(),
                "definiteness": self.definiteness.value, "admissible": self.admissible,
                "warnings": list(self.warnings)}


def to_MN(spec, strict: bool = False) -> MappingReport:
    """Map a classical spec to ``(M, N)``.

    Inadmissible specs still map (near-boundary studies are useful) and carry
    warnings; ``strict=True`` raises :class:`InadmissibleSpec` instead.
    """
    problems = spec.problems()
    if problems and strict:
        raise InadmissibleSpec("; ".join(problems))
    M, N = spec.forms()
    d = definiteness(M + N)
    warns = list(problems)
    if d is not Definiteness.NEG_DEF:
        warns.append(f"M + N is {d.value}, not NegDef")
    return MappingReport(M, N, d, not problems, tuple(warns))


def loop_phi(spec, Phi):
    """The element to place in the positive-feedback loop."""
    if spec.convention is Convention.POSITIVE:
        return Phi
    if isinstance(Phi, CausalOperator):
        return NegatedOperator(Phi)
    if isinstance(Phi, Relation):
        return Negated(Phi)
    raise TypeError(f"cannot negate {type(Phi).__name__}")


# -- passivity on truncations -------------------------------------------------


def passivity_value(H: CausalOperator, xi, T: int, eps: float, delta: float) -> float:
    """``Re<xi, H xi>_T - eps |xi|_T^2 - delta |H xi|_T^2``."""
    h = H.simulate(xi)
    return float(np.real(truncated_sip(xi, h, T)) - eps * truncated_norm(xi, T) ** 2
                 - delta * truncated_norm(h, T) ** 2)


def _fit_indices(H, probes, T_list):
    a_list, b_list = [], []
    for xi in probes:
        h = H.simulate(xi)
        for T in T_list:
            nx = truncated_norm(xi, T) ** 2
            if nx == 0:
                continue
            a_list.append(float(np.real(truncated_sip(xi, h, T))) / nx)
            b_list.append(truncated_norm(h, T) ** 2 / nx)
    if not a_list:
        return 0.0, 0.0
    amin = min(a_list)
    # keep half of the available slack so the fitted inequality is strict on the probes
    eps = amin - 0.5 * abs(amin)
    ratios = [(a - eps) / b for a, b in zip(a_list, b_list) if b > 0]
    delta = 0.5 * min(ratios) if ratios else 0.0
    return eps, delta


def fit_passivity(G: CausalOperator, Phi: CausalOperator, probes, T_list,
                  convention: Convention = Convention.NEGATIVE) -> Passivity:
    """Passivity indices that hold (with slack) on every probe and truncation.

    ``Phi`` is read in the given convention; under ``PositiveFeedback`` it is
    the pre-negated element and is flipped back before fitting.
    """
    phi_classic = NegatedOperator(Phi) if convention is Convention.POSITIVE else Phi
    eps1, delta1 = _fit_indices(G, probes, T_list)
    eps2, delta2 = _fit_indices(phi_classic, probes, T_list)
    return Passivity(eps1, delta1, eps2, delta2, convention)


@dataclass
class PassivityReport:
    spec: Passivity
    mapping: MappingReport
    violations: list = field(default_factory=list)   # (which, probe index, T, value)
    gain: GainBound | None = None
    notes: list = field(default_factory=list)

    @property
    def gamma(self) -> float | None:
        return None if self.gain is None else self.gain.gamma

    @property
    def stable(self) -> bool:
        return self.gain is not None and not self.violations

    def as_dict(self):
        return {
            "spec": {"eps1": self.spec.eps1, "delta1": self.spec.delta1,
                     "eps2": self.spec.eps2, "delta2": self.spec.delta2,
                     "convention": self.spec.convention.value},
            "mapping": self.mapping.as_dict(),
            "violations": [list(v) for v in self.violations],
            "gain": None if self.gain is None else self.gain.as_dict(),
            "notes": list(self.notes),
        }


def certify_passivity(spec: Passivity, G: CausalOperator, Phi: CausalOperator, probes,
                     T_list) -> PassivityReport:
    """Check both passivity inequalities on probes at every truncation, then bound the gain.

    ``Phi`` is read in ``spec.convention``.  The G-side inequality at
    truncation T equals the N-constraint on ``(G xi, xi)`` in the truncated
    space; both values are computed and a mismatch is noted.
    """
    close = get_tolerance().close
    mapping = to_MN(spec)
    phi_classic = NegatedOperator(Phi) if spec.convention is Convention.POSITIVE else Phi
    report = PassivityReport(spec, mapping)
    for i, xi in enumerate(probes):
        xi = np.asarray(xi)
        space = loop_space(len(xi), np.iscomplexobj(xi))
        gx = space.vector(G.simulate(xi))
        for T in T_list:
            v1 = passivity_value(G, xi, T, spec.eps1, spec.delta1)
            v2 = passivity_value(phi_classic, xi, T, spec.eps2, spec.delta2)
            sT = space.with_horizon(min(T, space.length))
            vN = qc_eval(sT, mapping.N, np.stack([gx, space.vector(xi)]))
            if not close(v1, vN, 1 + abs(v1)):
                report.notes.append(f"probe {i}, T={T}: G-side value {v1:.6g} != N-constraint {vN:.6g}")
            tol = 1e-10 * (1 + truncated_norm(xi, T) ** 2)
            if v1 < -tol:
                report.violations.append(("G", i, T, v1))
            if v2 < -tol:
                report.violations.append(("Phi", i, T, v2))
    if mapping.neg_def:
        report.gain = gain_bound(mapping.M, mapping.N)
    else:
        report.notes.extend(mapping.warnings)
    if report.violations:
        report.notes.append(f"{len(report.violations)} passivity violations on probes")
    return report

