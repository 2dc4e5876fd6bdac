"""Shared numerical tolerance.

Equality checks pass when ``|a - b| <= max(atol, rtol * scale)``.  The active
tolerance lives in a context variable so threads and nested overrides don't
interfere with each other.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace

__all__ = ["Tolerance", "get_tolerance", "set_tolerance", "tolerance"]


@dataclass(frozen=True)
class Tolerance:
    atol: float = 1e-10
    rtol: float = 1e-9

    def bound(self, scale: float = 0.0) -> float:
        return max(self.atol, self.rtol * abs(scale))

    def close(self, a, b, scale: float | None = None) -> bool:
        if scale is None:
            scale = max(abs(a), abs(b))
        return abs(a - b) <= self.bound(scale)

    def nonneg(self, value: float, scale: float = 0.0) -> bool:
        """True if ``value >= 0`` up to tolerance."""
        return value >= -self.bound(scale)


_CURRENT: contextvars.ContextVar[Tolerance] = contextvars.ContextVar(
    "robound_tolerance", default=Tolerance()
)


def get_tolerance() -> Tolerance:
    return _CURRENT.get()


def set_tolerance(atol: float | None = None, rtol: float | None = None) -> Tolerance:
    tol = get_tolerance()
    if atol is not None:
        tol = replace(tol, atol=float(atol))
    if rtol is not None:
        tol = replace(tol, rtol=float(rtol))
    _CURRENT.set(tol)
    return tol


@contextlib.contextmanager
def tolerance(atol: float | None = None, rtol: float | None = None):
    token = _CURRENT.set(get_tolerance())
    try:
        yield set_tolerance(atol, rtol)
    finally:
        _CURRENT.reset(token)
