"""Adaptive Simpson quadrature.

scipy's ``quad`` would do the integrals, but it reports trouble as warnings
rather than errors and gives no control over the recursion; the eikonal path
needs a hard failure when the tolerance cannot be met.
"""

from __future__ import annotations

import math

from .errors import QuadratureFailure

MAX_DEPTH = 60


def adaptive_simpson(fun, a: float, b: float, tol: float = 1e-12) -> float:
    if a == b:
        return 0.0
    fa, fm, fb = fun(a), fun(0.5 * (a + b)), fun(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    parts: list = []
    _recurse(fun, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, parts)
    return math.fsum(parts)


def _recurse(fun, a, b, fa, fm, fb, whole, tol, depth, parts):
    # explicit stack keeps deep refinement near endpoint singularities off
    # the interpreter's recursion limit
    stack = [(a, b, fa, fm, fb, whole, tol, depth)]
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fun(lm), fun(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or abs(b - a) <= 4 * math.ulp(max(abs(a), abs(b))):
            parts.append(left + right + delta / 15.0)
            continue
        if depth <= 0:
            raise QuadratureFailure(
                f"tolerance {tol:.3g} not met on [{a!r}, {b!r}] at maximum depth"
            )
        stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))
        stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth - 1))
