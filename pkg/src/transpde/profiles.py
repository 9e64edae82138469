"""Real intervals and one-variable profile functions a(t)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .expr import parse


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def real_line(cls) -> Interval:
        return cls(-math.inf, math.inf, False, False)

    def contains(self, t: float) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True

    def in_closure(self, t: float) -> bool:
        return self.lo <= t <= self.hi

    def is_interior(self, t: float) -> bool:
        return self.lo < t < self.hi

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def to_json(self) -> list:
        """``[lo, hi]`` with ``None`` standing for an unbounded end."""
        return [
            self.lo if math.isfinite(self.lo) else None,
            self.hi if math.isfinite(self.hi) else None,
        ]

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo}, {self.hi}{right}"


def fmt_number(x: float) -> str:
    """Shortest decimal that round-trips, without a trailing ``.0``."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True, eq=False)
class ProfileFunction:
    """The profile ``a`` of a transnormal function, with its derivative."""

    evaluate: Callable[[float], float]
    derivative: Callable[[float], float]
    domain: Interval
    formula: str = ""

    def __call__(self, t: float) -> float:
        return self.evaluate(t)

    @classmethod
    def from_formula(cls, formula: str, domain: Interval, variable: str = "t"):
        e = parse(formula, [variable])

        def value(t: float) -> float:
            return e.eval({variable: t})

        def slope(t: float) -> float:
            return e.eval_with_partials({variable: t}).partials[0]

        return cls(value, slope, domain, formula)

    @classmethod
    def constant(cls, c: float, domain: Interval) -> ProfileFunction:
        c = float(c)
        return cls(lambda t: c, lambda t: 0.0, domain, fmt_number(c))


def distance_profile(delta: float) -> ProfileFunction:
    """Constant-one profile on ``[0, delta]`` shared by all distance functions
    to a focal set (``delta`` may be ``math.inf``)."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return ProfileFunction.constant(1.0, Interval(0.0, delta, True, math.isfinite(delta)))
