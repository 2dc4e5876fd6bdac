"""Linear relations that interpolate a pair inside a quadratic constraint.

Given ``(e, y)`` with ``<(e, y), M (e, y)> >= 0`` we build a linear relation
``Phi`` that contains ``(e, y)`` and satisfies the M-constraint on its whole
domain.  Five cases, chosen by ``||e||``, ``||y||`` and
``rho = <e/||e||, y/||y||>``:

* ``||e|| = ||y|| = 0``   -> ``{(z, x): ||z|| = ||x|| = 0}``
* ``||e|| = 0 < ||y||``   -> ``{(z, x): ||z|| = 0}``
* ``||y|| = 0 < ||e||``   -> the zero map
* ``|rho| = 1``           -> ``x -> rho ||y|| / ||e|| x``
* ``|rho| < 1``           -> a rotation of span{e, y} scaled by
  ``||y|| / ||e||``, plus ``eta_dir`` times the orthogonal remainder.

When ``||e|| > 0`` the result is a linear function on all of V and is returned
as a :class:`~robound.relations.LinearMap`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._tol import get_tolerance
from .errors import AnchorViolatesM, CaseAssertionFailed
from .quadform import VERTICAL, HermitianForm2, is_nonneg_qc, nonneg_direction, qc_eval
from .relations import (
    LinearMap,
    LoopWitness,
    NullNull,
    Relation,
    Singleton,
    VerticalLine,
    evaluate_loop,
    is_linear_closed,
)

__all__ = [
    "Case",
    "Interpolant",
    "InterpolantReport",
    "ALIGN_TOL",
    "extend",
    "verify_interpolant",
    "realize_violation",
]

#: ``||y_hat - rho e_hat||`` at or below this routes to the aligned case
ALIGN_TOL = 1e-8


class Case(str, enum.Enum):
    DEGENERATE_NULL_NULL = "DegenerateNullNull"
    VERTICAL_LINE = "VerticalLine"
    ZERO_MAP = "ZeroMap"
    ALIGNED_SCALING = "AlignedScaling"
    GENERAL_ROTATION = "GeneralRotation"


@dataclass(frozen=True, eq=False)
class Interpolant:
    case: Case
    Phi: Relation
    e: np.ndarray
    y: np.ndarray
    ratio: float = 0.0              # ||y|| / ||e||
    rho: complex | float = 0.0
    phi: float = 0.0                # phase of M12
    eta_dir: complex | float = 0.0
    conditioning: float = 1.0       # 1 / (1 - |rho|^2)
    # general case only: orthonormal-ish frame of span{e, y}
    frame: dict = field(default_factory=dict, repr=False)

    def decompose(self, space, x):
        """Split ``x = x_ey + x_perp`` with ``x_ey`` in span{e, y} (general case)."""
        if self.case is not Case.GENERAL_ROTATION:
            raise ValueError("decomposition is defined for the general case only")
        f = self.frame
        x = space.vector(x)
        a = space.sip(f["e_hat"], x)
        b = space.sip(f["y_hat"], x)
        d = 1.0 - abs(self.rho) ** 2
        x_ey = ((a - self.rho * b) / d) * f["e_hat"] + ((b - np.conj(self.rho) * a) / d) * f["y_hat"]
        return x_ey, x - x_ey

    def formula(self, space, x) -> np.ndarray:
        """Evaluate the general-case map directly from the inner-product formula."""
        f = self.frame
        x_ey, x_perp = self.decompose(space, x)
        return (self.ratio * (space.sip(f["e_hat"], x_ey) * f["y_hat"]
                              + f["phase"] * space.sip(f["e_perp"], x_ey) * f["y_perp"])
                + self.eta_dir * x_perp)

    def as_dict(self):
        def enc(z):
            z = complex(z)
            return [z.real, z.imag] if z.imag else z.real

        d = {"case": self.case.value, "ratio": self.ratio, "rho": enc(self.rho),
             "phi": self.phi, "eta_dir": enc(self.eta_dir), "conditioning": self.conditioning}
        if isinstance(self.Phi, LinearMap):
            d["matrix"] = [[enc(v) for v in row] for row in self.Phi.A]
        return d


def extend(space, M: HermitianForm2, e, y) -> Interpolant:
    """Linear relation through ``(e, y)`` satisfying the M-constraint everywhere."""
    e, y = space.vector(e), space.vector(y)
    z = np.stack([e, y])
    value = qc_eval(space, M, z)
    if not is_nonneg_qc(value, space, M, z):
        raise AnchorViolatesM(f"anchor violates the M-constraint ({value:.6g})", value)
    th = get_tolerance().bound(M.fro)
    ne, ny = space.seminorm(e), space.seminorm(y)

    if space.is_null(e):
        if space.is_null(y):
            return Interpolant(Case.DEGENERATE_NULL_NULL, NullNull(), e, y)
        if M.m22 < -th:
            raise CaseAssertionFailed(f"||e|| = 0 < ||y|| needs M22 >= 0, got {M.m22}")
        return Interpolant(Case.VERTICAL_LINE, VerticalLine(), e, y)
    if space.is_null(y):
        if M.m11 < -th:
            raise CaseAssertionFailed(f"||y|| = 0 < ||e|| needs M11 >= 0, got {M.m11}")
        return Interpolant(Case.ZERO_MAP, LinearMap(np.zeros((space.dim, space.dim), space.dtype)),
                           e, y)

    e_hat, y_hat = e / ne, y / ny
    rho = space.sip(e_hat, y_hat)
    ratio = ny / ne
    w = y_hat - rho * e_hat
    s = space.seminorm(w)  # sqrt(1 - |rho|^2), computed without cancellation
    if s <= ALIGN_TOL or float(np.real(space._sip(w, w))) <= space.noise_floor(w):
        return Interpolant(Case.ALIGNED_SCALING, LinearMap(rho * ratio * space.basis()), e, y,
                           ratio=ratio, rho=rho, conditioning=math.inf if s == 0 else 1 / s**2)

    eta = nonneg_direction(M)
    if eta is VERTICAL:
        raise CaseAssertionFailed("no direction [1; eta] is nonnegative for M")
    e_perp = w / s
    y_perp = (np.conj(rho) * y_hat - e_hat) / s
    # e^{-2i phi} with M12 = |M12| e^{i phi}; 1 when M12 = 0
    phase = np.conj(M.m12) / M.m12 if M.m12 != 0 else 1.0
    if not space.is_complex:
        phase = float(np.real(phase))
    phi = float(np.angle(M.m12)) if M.m12 != 0 else 0.0
    I = Interpolant(Case.GENERAL_ROTATION, None, e, y, ratio=ratio, rho=rho, phi=phi,
                    eta_dir=eta, conditioning=1 / s**2,
                    frame={"e_hat": e_hat, "y_hat": y_hat, "e_perp": e_perp,
                           "y_perp": y_perp, "phase": phase})
    # Phi is linear, so its coordinate matrix is its action on the standard basis.
    A = np.stack([I.formula(space, b) for b in space.basis()], axis=1)
    return replace(I, Phi=LinearMap(A))


@dataclass
class InterpolantReport:
    case: Case
    anchor_residual: float
    anchor_scale: float
    min_value: float
    n_samples: int
    linear: bool
    anchor_contained: bool = True
    values: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.anchor_contained and self.min_value >= -get_tolerance().bound(1.0) and self.linear


def verify_interpolant(space, I: Interpolant, M: HermitianForm2, samples,
                       linearity_trials: int = 100) -> InterpolantReport:
    """Evaluate the M-constraint on ``(x, Phi x)`` for every sample and on the anchor.

    Values are normalized by ``||x||^2 + ||Phi x||^2`` before taking the minimum.
    """
    Phi = I.Phi
    contained = Phi.contains(space, I.e, I.y)
    if Phi.total_function:
        anchor_residual = space.resolved_seminorm(Phi.apply(space, I.e)[0] - I.y)
    else:
        anchor_residual = 0.0 if contained else math.inf
    values = []
    points = [(I.e, I.y)]
    for x in samples:
        for img in Phi.apply(space, x):
            points.append((space.vector(x), img))
    for x, img in points:
        z = np.stack([x, img])
        v = qc_eval(space, M, z)
        scale = space.pair_seminorm(z) ** 2
        values.append(v / scale if scale > 0 else v)
    linear = is_linear_closed(space, Phi, linearity_trials)
    return InterpolantReport(I.case, anchor_residual, space.resolved_seminorm(I.y), min(values),
                             len(points) - 1, linear, contained, values)


def realize_violation(space, G: Relation, M: HermitianForm2, witness: LoopWitness,
                   mode: str = "linear"):
    """Close a gain-violating loop with a Phi that satisfies the M-constraint.

    ``mode="linear"`` extends ``(e2, y2)`` to a linear relation;
    ``mode="unconstrained"`` uses the singleton ``{(e2, y2)}``.  Returns
    ``(Phi, witness)`` with the witness re-flagged against ``Phi``.
    """
    missing = [f for f in ("e1_sum", "e2_sum", "g_link") if f not in witness.flags]
    if missing:
        raise ValueError(f"witness is missing loop equations {missing}")
    if mode == "linear":
        Phi = extend(space, M, witness.e2, witness.y2).Phi
    elif mode == "unconstrained":
        z = np.stack([witness.e2, witness.y2])
        v = qc_eval(space, M, z)
        if not is_nonneg_qc(v, space, M, z):
            raise AnchorViolatesM(f"(e2, y2) violates the M-constraint ({v:.6g})", v)
        Phi = Singleton(space.vector(witness.e2), space.vector(witness.y2))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    w = evaluate_loop(space, G, Phi, witness.u1, witness.u2, witness.y1, witness.y2,
                      witness.e1, witness.e2)
    return Phi, w

