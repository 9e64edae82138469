"""Independent residual checks of lifted solutions on the manifold.

The residual is always recomputed from scratch: <grad u, grad u> comes from
``geometry.gradient`` and ``geometry.inner_g`` on the manifold model, never
from the reduced equation the solver integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import NoValidSamples, TranspdeError

FOCAL_EXCLUSION = 1e-4


@dataclass(frozen=True)
class ResidualReport:
    sample_count: int
    max_abs: float
    mean_abs: float
    worst_point: Optional[geo.ChartPoint]
    tolerance: float
    passed: bool
    gradient_mode: str
    seed: int

    @classmethod
    def from_errors(cls, errors, points, model, tol, mode, seed) -> ResidualReport:
        if not errors:
            raise NoValidSamples("no valid samples to aggregate")
        errs = [float(e) for e in errors]
        k = int(np.argmax(errs))
        worst = max(errs)
        return cls(
            sample_count=len(errs),
            max_abs=worst,
            mean_abs=math.fsum(errs) / len(errs),
            worst_point=geo.ChartPoint(geo.coords_of(points[k]), model),
            tolerance=float(tol),
            passed=bool(worst <= tol),
            gradient_mode=mode,
            seed=int(seed),
        )

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "worst_point": None if self.worst_point is None
            else [float(v) for v in self.worst_point.coords],
            "tolerance": self.tolerance,
            "pass": self.passed,
            "gradient_mode": self.gradient_mode,
            "seed": self.seed,
        }


def _seed_stream(seed: int):
    """Child seeds for the per-sample level-set draws."""
    ss = np.random.SeedSequence(seed)
    while True:
        for child in ss.spawn(64):
            yield int(child.generate_state(1)[0])


def _regular_1d(f, t: float) -> bool:
    if abs(f.profile(t)) < FOCAL_EXCLUSION:
        return False
    return f.image.is_interior(t) and not any(abs(t - c) < FOCAL_EXCLUSION for c in f.focal_values)


def manifold_residual(model: geo.ManifoldModel, F, u, f, count: int = 200, seed: int = 0,
                      tol: float = 1e-4, gradient_mode: str = "finite-difference",
                      h: Optional[float] = None) -> ResidualReport:
    """Residual of F(x, u, <grad u, grad u>) at pseudorandom regular points.

    ``F`` is an expression in (t, r, p) when ``f`` is a single transnormal
    function, or in (t, s, r, tau) when ``f`` is a pair (f_L, f_N) on a warped
    product; t and s are then f_L(x) and f_N(z).  ``u`` must provide
    ``value``, ``differential`` (analytic mode) and ``sample_parameters(rng)``,
    which draws t (or (t, s)) from the region where u is defined.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    two = isinstance(f, (tuple, list))
    rng = np.random.default_rng(seed)
    seeds = _seed_stream(seed)
    errs, points = [], []
    attempts = 0
    while len(errs) < count:
        attempts += 1
        if attempts > 50 * count:
            raise NoValidSamples(
                f"only {len(errs)} of {count} valid samples after {attempts - 1} draws"
            )
        try:
            if two:
                fl, fn = f
                t, s = u.sample_parameters(rng)
                if not (_regular_1d(fl, t) and _regular_1d(fn, s)):
                    continue
                x = geo.sample_product_level(model, fl, fn, (t, s), 1, next(seeds))[0]
            else:
                t = u.sample_parameters(rng)
                if not _regular_1d(f, t):
                    continue
                x = geo.sample_level_set(f, t, 1, next(seeds))[0]
            r = u.value(x.coords)
            g = geo.gradient(model, u, x, mode=gradient_mode, h=h)
            nrm = geo.inner_g(model, x, g, g)
            if two:
                val = F.eval({"t": fl.value(x.coords[: model.base.coord_dim]),
                              "s": fn.value(x.coords[model.base.coord_dim:]),
                              "r": r, "tau": nrm})
            else:
                val = F.eval({"t": f.value(x), "r": r, "p": nrm})
        except TranspdeError:
            continue
        errs.append(abs(val))
        points.append(x)
    return ResidualReport.from_errors(errs, points, model, tol, gradient_mode, seed)


@dataclass(frozen=True)
class InvarianceReport:
    levels: tuple
    spreads: tuple
    max_spread: float
    tolerance: float
    passed: bool
    seed: int

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "spreads": list(self.spreads),
            "max_spread": self.max_spread,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "seed": self.seed,
        }


def invariance_check(u, f, levels, per_level_count: int = 20, seed: int = 0,
                     tol: float = 1e-12) -> InvarianceReport:
    """Max pairwise spread of u over sampled points of each level set of f."""
    spreads = []
    for i, level in enumerate(levels):
        pts = geo.sample_level_set(f, level, per_level_count, seed + i)
        vals = [u.value(p.coords) for p in pts]
        spreads.append(float(max(vals) - min(vals)))
    worst = max(spreads) if spreads else 0.0
    return InvarianceReport(tuple(float(v) for v in levels), tuple(spreads), worst,
                            float(tol), bool(worst <= tol), int(seed))
