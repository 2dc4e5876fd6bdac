"""Discrete-time extended signal space: truncation, causal operators, loop simulation.

Signals are 1-D arrays, zero beyond their stored length.  The truncation
semi-inner product ``<x, y>_T`` only sees samples ``t < T``; it is a genuine
semi-inner product because signals that vanish on ``[0, T)`` have zero norm.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._tol import get_tolerance
from .certify import gain_bound
from .errors import AlgebraicLoop
from .quadform import HermitianForm2, is_nonneg_qc, qc_eval
from .relations import FunctionRelation, LoopWitness, evaluate_loop, pointwise
from .space import COMPLEX, REAL, TruncatedSignalSpace

__all__ = [
    "truncated_sip",
    "truncated_norm",
    "CausalOperator",
    "StateSpace",
    "FIR",
    "Delay",
    "StaticNL",
    "NegatedOperator",
    "simulate",
    "solve_loop",
    "loop_space",
    "GainReport",
    "empirical_gain",
    "read_signal_csv",
    "write_signal_csv",
]


def _pad(x, n):
    x = np.asarray(x)
    if len(x) >= n:
        return x[:n]
    return np.concatenate([x, np.zeros(n - len(x), dtype=x.dtype)])


def truncated_sip(x, y, T: int):
    """``sum_{t < T} conj(x_t) y_t`` with zero extension."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    return np.vdot(_pad(x, T), _pad(y, T))


def truncated_norm(x, T: int) -> float:
    return float(np.sqrt(max(np.real(truncated_sip(x, x, T)), 0.0)))


# -- operators --------------------------------------------------------------


class _Stepper:
    """Per-simulation state.  ``output(u)`` peeks, ``advance(u)`` commits."""

    def output(self, u):
        raise NotImplementedError

    def advance(self, u):
        raise NotImplementedError


class CausalOperator:
    strictly_causal = False
    linear = True

    def stepper(self) -> _Stepper:
        raise NotImplementedError

    def simulate(self, x) -> np.ndarray:
        return simulate(self, x)

    def as_relation(self) -> FunctionRelation:
        return FunctionRelation(self.simulate, linear=self.linear, name=type(self).__name__)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


class _SSStepper(_Stepper):
    def __init__(self, op):
        self.op = op
        self.x = np.zeros(op.A.shape[0], dtype=complex if op.is_complex else float)

    def output(self, u):
        return self.op.C @ self.x + self.op.D * u

    def advance(self, u):
        self.x = self.op.A @ self.x + self.op.B * u


@dataclass(frozen=True, eq=False)
class StateSpace(CausalOperator):
    """SISO ``x+ = A x + B u``, ``y = C x + D u`` from zero initial state."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: complex | float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        n = A.shape[0]
        B = np.asarray(self.B).reshape(n)
        C = np.asarray(self.C).reshape(n)
        if A.shape != (n, n):
            raise ValueError("A must be square")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def is_complex(self):
        return any(np.iscomplexobj(v) for v in (self.A, self.B, self.C, self.D))

    @property
    def strictly_causal(self):
        return self.D == 0

    def stepper(self):
        return _SSStepper(self)

    def describe(self):
        return {"kind": "state_space", "order": self.A.shape[0]}


class _FIRStepper(_Stepper):
    def __init__(self, taps):
        self.taps = taps
        self.hist = [0.0] * (len(taps) - 1)   # most recent first

    def output(self, u):
        return self.taps[0] * u + sum(h * p for h, p in zip(self.taps[1:], self.hist))

    def advance(self, u):
        if self.hist:
            self.hist = [u] + self.hist[:-1]


@dataclass(frozen=True, eq=False)
class FIR(CausalOperator):
    """``y_t = sum_k taps[k] x_{t-k}``."""

    taps: tuple

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(self.taps) or (0.0,))

    @property
    def strictly_causal(self):
        return self.taps[0] == 0

    def stepper(self):
        return _FIRStepper(self.taps)

    def describe(self):
        return {"kind": "fir", "taps": [float(np.real(t)) for t in self.taps]}


@dataclass(frozen=True)
class Delay(CausalOperator):
    k: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("delay must be nonnegative")

    @property
    def strictly_causal(self):
        return self.k >= 1

    def stepper(self):
        return _FIRStepper((0.0,) * self.k + (1.0,))

    def describe(self):
        return {"kind": "delay", "k": self.k}


class _StaticStepper(_Stepper):
    def __init__(self, fn):
        self.fn = fn

    def output(self, u):
        return self.fn(np.asarray(u))[()]

    def advance(self, u):
        pass


@dataclass(frozen=True)
class StaticNL(CausalOperator):
    """Memoryless pointwise map (see :func:`robound.relations.pointwise`)."""

    name: str
    params: tuple = ()

    def __init__(self, name, **params):
        pointwise(name, params)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    @property
    def linear(self):
        return self.name == "gain"

    def __call__(self, v):
        return pointwise(self.name, dict(self.params))(np.asarray(v))

    def stepper(self):
        return _StaticStepper(self)

    def describe(self):
        return {"kind": "static", "map": self.name, **dict(self.params)}


class _NegStepper(_Stepper):
    def __init__(self, inner):
        self.inner = inner

    def output(self, u):
        return -self.inner.output(u)

    def advance(self, u):
        self.inner.advance(u)


@dataclass(frozen=True)
class NegatedOperator(CausalOperator):
    """``x -> -H x``."""

    inner: CausalOperator

    @property
    def strictly_causal(self):
        return self.inner.strictly_causal

    @property
    def linear(self):
        return self.inner.linear

    def stepper(self):
        return _NegStepper(self.inner.stepper())

    def describe(self):
        return {"kind": "negated", "inner": self.inner.describe()}


def simulate(op: CausalOperator, x) -> np.ndarray:
    """Forward recursion; output has the input's horizon."""
    x = np.asarray(x)
    dtype = complex if np.iscomplexobj(x) else float
    out = np.zeros(len(x), dtype=complex)
    s = op.stepper()
    for t, u in enumerate(x):
        out[t] = s.output(u)
        s.advance(u)
    if dtype is float:
        if np.any(np.abs(out.imag) > 0):
            return out
        return out.real
    return out


# -- closed loop ------------------------------------------------------------


def _solve_static(F, u1, t):
    """Unique root of ``e = F(e)`` by Newton with a finite-difference slope."""
    e = complex(u1)
    for _ in range(100):
        fe = F(e)
        h = 1e-7 * (1 + abs(e))
        slope = (F(e + h) - fe) / h
        if abs(1 - slope) < 1e-9:
            raise AlgebraicLoop(f"loop gain is 1 at time {t}: no unique solution")
        step = (e - fe) / (1 - slope)
        e -= step
        if abs(step) <= 1e-14 * (1 + abs(e)):
            if abs(e - F(e)) <= 1e-10 * (1 + abs(e)):
                return e
            break
    raise AlgebraicLoop(f"static loop equation did not converge at time {t}")


def loop_space(n: int, complex_: bool = False) -> TruncatedSignalSpace:
    return TruncatedSignalSpace(n, n, field=COMPLEX if complex_ else REAL)


def solve_loop(G: CausalOperator, Phi: CausalOperator, u1, u2):
    """Time-stepped solution of the positive-feedback loop.

    Returns ``(space, witness)`` where the space is the truncated-signal space
    over the full horizon.  A strictly causal element gives the solution by
    forward substitution; otherwise each step solves a scalar fixed point.
    """
    n = max(len(u1), len(u2))
    iscx = np.iscomplexobj(u1) or np.iscomplexobj(u2) or \
        (isinstance(G, StateSpace) and G.is_complex) or (isinstance(Phi, StateSpace) and Phi.is_complex)
    u1 = _pad(np.asarray(u1, dtype=complex), n)
    u2 = _pad(np.asarray(u2, dtype=complex), n)
    y1, y2, e1, e2 = (np.zeros(n, dtype=complex) for _ in range(4))
    sg, sp = G.stepper(), Phi.stepper()
    for t in range(n):
        if G.strictly_causal:
            y1[t] = sg.output(0.0)
            e2[t] = u2[t] + y1[t]
            y2[t] = sp.output(e2[t])
            e1[t] = u1[t] + y2[t]
        elif Phi.strictly_causal:
            y2[t] = sp.output(0.0)
            e1[t] = u1[t] + y2[t]
            y1[t] = sg.output(e1[t])
            e2[t] = u2[t] + y1[t]
        else:
            e1[t] = _solve_static(lambda e: u1[t] + sp.output(u2[t] + sg.output(e)), u1[t], t)
            y1[t] = sg.output(e1[t])
            e2[t] = u2[t] + y1[t]
            y2[t] = sp.output(e2[t])
        sg.advance(e1[t])
        sp.advance(e2[t])
    sigs = (u1, u2, y1, y2, e1, e2)
    if not iscx:
        sigs = tuple(s.real for s in sigs)
    space = loop_space(n, iscx)
    w = evaluate_loop(space, G.as_relation(), Phi.as_relation(), *sigs)
    return space, w


@dataclass
class GainReport:
    max_ratio: float
    per_horizon: dict
    gamma: float | None = None
    plant_constraint_passed: bool | None = None
    phi_qc_passed: bool | None = None
    n_inputs: int = 0
    notes: list = field(default_factory=list)

    @property
    def within_certified(self) -> bool | None:
        if self.gamma is None:
            return None
        return self.max_ratio <= self.gamma + get_tolerance().bound(self.gamma)

    def as_dict(self):
        return {
            "max_ratio": self.max_ratio,
            "per_horizon": {str(k): v for k, v in self.per_horizon.items()},
            "gamma": self.gamma,
            "plant_constraint_passed": self.plant_constraint_passed,
            "phi_qc_passed": self.phi_qc_passed,
            "within_certified": self.within_certified,
            "n_inputs": self.n_inputs,
            "notes": list(self.notes),
        }


def empirical_gain(G: CausalOperator, Phi: CausalOperator, input_bank, T_list,
                   M: HermitianForm2 | None = None, N: HermitianForm2 | None = None) -> GainReport:
    """Largest ``||y||_T / ||u||_T`` over the bank and horizons.

    With ``(M, N)`` the report also carries the certified gamma and whether the
    bank inputs (as probes, at every horizon) satisfy the N-constraint on G
    and the M-constraint on Phi.
    """
    T_list = sorted(set(int(T) for T in T_list))
    per_T = {T: 0.0 for T in T_list}
    cond_ok = phi_ok = True
    for u1, u2 in input_bank:
        space, w = solve_loop(G, Phi, u1, u2)
        for T in T_list:
            sT = space.with_horizon(min(T, space.length))
            r = w.ratio(sT)
            per_T[T] = max(per_T[T], r)
            if M is not None and N is not None:
                zg = np.stack([space.vector(G.simulate(w.u1)), space.vector(w.u1)])
                cond_ok &= is_nonneg_qc(qc_eval(sT, N, zg), sT, N, zg)
                zp = np.stack([w.e2, w.y2])
                phi_ok &= is_nonneg_qc(qc_eval(sT, M, zp), sT, M, zp)
    report = GainReport(max(per_T.values(), default=0.0), per_T, n_inputs=len(input_bank))
    if M is not None and N is not None:
        try:
            report.gamma = gain_bound(M, N).gamma
        except Exception as exc:  # noqa: BLE001 - surfaced in the report
            report.notes.append(f"no certified gamma: {exc}")
        report.plant_constraint_passed = bool(cond_ok)
        report.phi_qc_passed = bool(phi_ok)
        if not cond_ok:
            report.notes.append("plant N-constraint failed on the bank; gamma is not a valid bound")
    return report


# -- CSV --------------------------------------------------------------------


def read_signal_csv(path) -> np.ndarray:
    """One sample per row; a row ``re,im`` makes the signal complex."""
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            if len(row) == 1:
                vals.append(complex(float(row[0]), 0.0))
            elif len(row) == 2:
                vals.append(complex(float(row[0]), float(row[1])))
            else:
                raise ValueError(f"{path}: rows must hold 1 or 2 numbers, got {row}")
    x = np.array(vals, dtype=complex)
    return x if np.any(x.imag) else x.real


def write_signal_csv(path, x) -> None:
    x = np.asarray(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for v in x:
            if np.iscomplexobj(x):
                w.writerow([repr(float(v.real)), repr(float(v.imag))])
            else:
                w.writerow([repr(float(v))])

