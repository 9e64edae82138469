"""Dormand-Prince 5(4) integrator with step-rejection hooks.

Written out here rather than taken from scipy because the reduced solvers
need to veto steps (Hamiltonian drift, sign loss, leaving the domain) and to
stop cleanly at a hard minimum step, neither of which ``solve_ivp`` exposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import TranspdeError

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


def dp_step(fun, t: float, y: np.ndarray, f0: np.ndarray, h: float):
    """One step; returns (y_new, f_new, error estimate vector)."""
    k = np.empty((7, y.size))
    k[0] = f0
    for i in range(1, 7):
        yi = y + h * (np.asarray(A[i]) @ k[:i])
        k[i] = fun(t + C[i] * h, yi)
    y_new = y + h * (B5 @ k)
    return y_new, k[6], h * (E @ k)


@dataclass
class OdeResult:
    t: list
    y: list
    f: list
    status: str = "success"
    error: Optional[BaseException] = None
    reason: str = ""
    rejected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def progressed(self) -> bool:
        return len(self.t) > 1


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    tol: float = 1e-10,
    *,
    max_step: float = math.inf,
    min_step: float = 1e-13,
    h0: Optional[float] = None,
    accept: Optional[Callable[[float, np.ndarray], Optional[str]]] = None,
    max_steps: int = 200000,
) -> OdeResult:
    """Adaptive integration from t0 towards t_end (either direction).

    Errors are measured as RMS of err / (tol * (1 + |y|)).  ``fun`` raising a
    package error, or ``accept(t, y)`` returning a reason string, rejects the
    step; when the step would fall below ``min_step`` the run stops with
    status ``"stalled"`` and the last rejection recorded.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    f = np.atleast_1d(np.asarray(fun(t0, y), dtype=float))
    out = OdeResult([t0], [y.copy()], [f.copy()])
    span = t_end - t0
    if span == 0:
        return out
    d = 1.0 if span > 0 else -1.0
    hmax = min(max_step, abs(span))
    h = h0 if h0 is not None else min(hmax, 1e-2 * max(abs(span), 1e-3))
    t = t0
    for _ in range(max_steps):
        remaining = abs(t_end - t)
        if remaining <= 4 * np.finfo(float).eps * max(1.0, abs(t_end)):
            return out
        h = min(h, hmax, remaining)
        floor = max(min_step, 4 * np.finfo(float).eps * max(1.0, abs(t)))
        if h < floor and h < remaining:
            out.status = "stalled"
            return out
        try:
            y_new, f_new, err = dp_step(fun, t, y, f, d * h)
            if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
                raise FloatingPointError("non-finite stage value")
        except (TranspdeError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            out.error, out.reason = exc, type(exc).__name__
            out.rejected += 1
            h *= 0.25
            continue
        scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if en > 1.0:
            out.rejected += 1
            out.reason = "error"
            h *= max(MIN_FACTOR, SAFETY * en ** -0.2)
            continue
        t_new = t_end if h == remaining else t + d * h
        if accept is not None:
            why = accept(t_new, y_new)
            if why:
                out.rejected += 1
                out.reason = why
                out.error = None
                h *= 0.5
                continue
        t, y, f = t_new, y_new, np.asarray(f_new, dtype=float)
        out.t.append(t)
        out.y.append(y.copy())
        out.f.append(f.copy())
        out.error, out.reason = None, ""
        h *= MAX_FACTOR if en == 0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
    out.status = "max_steps"
    return out


def fixed_step(fun, t0: float, y0, t_end: float, n: int) -> np.ndarray:
    """``n`` equal fifth-order steps; used for convergence-order checks."""
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    h = (t_end - t0) / n
    t = t0
    f = np.asarray(fun(t, y), dtype=float)
    for _ in range(n):
        y, f, _ = dp_step(fun, t, y, f, h)
        t += h
    return y
