"""Catalog of transnormal functions.

A function f on a semi-Riemannian manifold is transnormal when
<grad f, grad f> = a(f) for a profile a.  Each entry bundles f, its ambient
differential, the profile, the image interval and the focal values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from .errors import (
    BadAxis,
    BadSplit,
    HahnConditionViolated,
    NoRegularPoints,
    NondifferentiablePoint,
    TranspdeError,
    UnsupportedEll,
)
from .profiles import Interval, ProfileFunction, distance_profile, fmt_number

REGULAR_EPS = 1e-6
FOCAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TransnormalFunction:
    label: str
    model: geo.ManifoldModel
    evaluate: Callable[[np.ndarray], float]
    differential: Callable[[np.ndarray], np.ndarray]
    profile: ProfileFunction
    focal_values: tuple = ()
    image: Interval = field(default_factory=Interval.real_line)
    level_sampler: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def value(self, x) -> float:
        return float(self.evaluate(geo.coords_of(x)))

    def __call__(self, x) -> float:
        return self.value(x)

    def is_focal(self, t: float) -> bool:
        return any(abs(t - c) <= FOCAL_TOL for c in self.focal_values)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "manifold": self.model.describe(),
            "profile": self.profile.formula,
            "image": self.image.to_json(),
            "focal_values": list(self.focal_values),
            "params": self.params,
        }


def _focal_from_profile(profile: ProfileFunction, candidates, image: Interval) -> tuple:
    return tuple(
        float(c) for c in candidates
        if image.in_closure(c) and abs(profile(c)) <= FOCAL_TOL
    )


# -- Hahn quadratics ---------------------------------------------------------------

def hahn_quadratic(A, a_vec, alpha_h: float, signature: geo.Signature,
                   image: Optional[Interval] = None,
                   label: str = "hahn_quadratic") -> TransnormalFunction:
    """f(x) = <Ax,x> + 2<a,x> on R^n_s with profile 4*alpha_h*t + 4<a,a>.

    Besides (A - alpha_h I) A = 0 the identity needs A to be self-adjoint for
    the semi-Euclidean product and A a = alpha_h a; all three are checked.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    av = np.asarray(a_vec, dtype=float)
    n = signature.dimension
    if A.shape != (n, n) or av.shape != (n,):
        raise geo.DimensionMismatch(f"Hahn data must be {n}x{n} and {n}, got {A.shape}, {av.shape}")
    eta = signature.eta()
    alpha_h = float(alpha_h)
    scale = max(1.0, float(np.abs(A).max()))
    cond = (A - alpha_h * np.eye(n)) @ A
    if np.abs(cond).max() > 1e-10 * scale**2:
        raise HahnConditionViolated(
            f"(A - alpha I) A has max entry {np.abs(cond).max():.3g} (alpha = {alpha_h})"
        )
    adj = eta[:, None] * A.T * eta[None, :]
    if np.abs(adj - A).max() > 1e-10 * scale:
        raise HahnConditionViolated("A is not self-adjoint for the semi-Euclidean product")
    res = A @ av - alpha_h * av
    if np.abs(res).max() > 1e-10 * max(1.0, float(np.abs(av).max())) * scale:
        raise HahnConditionViolated(f"A a != alpha a (residual {np.abs(res).max():.3g})")

    beta = 4.0 * float(av @ (eta * av))
    model = geo.semi_euclidean(n, signature.negative_count)
    ea = eta * av
    sym = eta[:, None] * A  # matrix of x -> eta A x, symmetric since A is eta-self-adjoint

    def evaluate(x):
        return float(x @ (sym @ x) + 2.0 * (ea @ x))

    def differential(x):
        return 2.0 * (sym @ x) + 2.0 * ea

    formula = f"{fmt_number(4 * alpha_h)}*t + {fmt_number(beta)}"
    t_star = None
    if alpha_h != 0:
        t_star = -beta / (4.0 * alpha_h) + 0.0
    if image is None:
        if signature.riemannian and t_star is not None:
            image = (Interval(t_star, math.inf, True, False) if alpha_h > 0
                     else Interval(-math.inf, t_star, False, True))
        else:
            image = Interval.real_line()
    profile = ProfileFunction(
        lambda t: 4.0 * alpha_h * t + beta, lambda t: 4.0 * alpha_h, image, formula
    )
    focal = ()
    if t_star is not None and image.in_closure(t_star):
        focal = (t_star,)
    params = {
        "A": A.tolist(), "a": av.tolist(), "alpha": alpha_h,
        "n": n, "s": signature.negative_count, "beta": beta,
    }
    if t_star is not None:
        params["t_star"] = t_star
    return TransnormalFunction(label, model, evaluate, differential, profile, focal,
                               image, None, params)


# -- Cartan-Munzner families -----------------------------------------------------

def cartan_munzner(ell: int, model: geo.ManifoldModel, split=None, axis: Optional[int] = None,
                   image: Optional[Interval] = None,
                   label: str = "") -> TransnormalFunction:
    """ell = 1: f(x) = <x, v> for a unit spacelike axis v.
    ell = 2: f(x) = <x1, x1> - <x2, x2> for the split x = (x1, x2).
    Both have profile ell^2 (1 - t^2)."""
    if ell not in (1, 2):
        raise UnsupportedEll(f"only ell in {{1, 2}} is built in, got {ell}")
    if model.kind != geo.PSEUDO_SPHERE:
        raise ValueError("Cartan-Munzner functions live on a pseudo-sphere model")
    eta = np.asarray(model.eta)
    m = len(eta)
    riemannian = model.signature.riemannian
    c = float(ell * ell)
    formula = f"{fmt_number(c)}*(1-t^2)"
    if image is None:
        image = Interval(-1.0, 1.0) if riemannian else Interval.real_line()
    profile = ProfileFunction(lambda t: c * (1.0 - t * t), lambda t: -2.0 * c * t,
                              image, formula)
    focal = _focal_from_profile(profile, (-1.0, 1.0), image)

    if ell == 1:
        if split is not None:
            raise BadSplit("ell = 1 takes an axis, not a split")
        k = m - 1 if axis is None else int(axis)
        if not 0 <= k < m or eta[k] < 0:
            raise BadAxis(f"axis {axis} is not a spacelike ambient direction")
        ev = np.zeros(m)
        ev[k] = eta[k]

        def evaluate(x):
            return float(x[k])

        def differential(x):
            return ev

        sampler = None
        if riemannian:
            def sampler(level, rng):
                u = rng.standard_normal(m)
                u[k] = 0.0
                u /= np.linalg.norm(u)
                x = math.sqrt(max(0.0, 1.0 - level * level)) * u
                x[k] = level
                return x
        params = {"ell": 1, "n": model.dimension, "s": model.signature.negative_count, "axis": k}
    else:
        if split is None:
            if m % 2:
                raise BadSplit(f"no default split of {m} ambient coordinates")
            split = (m // 2, m // 2)
        n1, n2 = (int(v) for v in split)
        if n1 + n2 != m or n1 < 2 or n2 < 2:
            raise BadSplit(f"split {split} must have parts >= 2 summing to {m}")
        pd = np.concatenate([np.ones(n1), -np.ones(n2)])
        sym = eta * pd

        def evaluate(x):
            return float(x @ (sym * x))

        def differential(x):
            return 2.0 * sym * x

        sampler = None
        if riemannian:
            def sampler(level, rng):
                u1 = rng.standard_normal(n1)
                u2 = rng.standard_normal(n2)
                r1 = math.sqrt((1.0 + level) / 2.0)
                r2 = math.sqrt((1.0 - level) / 2.0)
                return np.concatenate([r1 * u1 / np.linalg.norm(u1), r2 * u2 / np.linalg.norm(u2)])
        params = {"ell": 2, "n": model.dimension, "s": model.signature.negative_count,
                  "split": [n1, n2]}
    return TransnormalFunction(label or f"cartan_munzner_l{ell}", model, evaluate,
                               differential, profile, focal, image, sampler, params)


# -- distance-type functions -------------------------------------------------------

def desitter_arccos(n1: int, n2: int, label: str = "desitter_arccos") -> TransnormalFunction:
    """f(z) = arccos(|z1|^2 - |z2|^2) on S^n, n = n1 + n2 - 1, with |grad f|^2 = 4.

    Evaluated as 2 atan2(|z2|, |z1|), which agrees on the sphere and keeps
    full relative accuracy near the focal sets f = 0 and f = pi.
    """
    if n1 < 2 or n2 < 2:
        raise BadSplit(f"split ({n1}, {n2}) needs both parts >= 2")
    model = geo.pseudo_sphere(n1 + n2 - 1)

    def evaluate(z):
        return 2.0 * math.atan2(np.linalg.norm(z[n1:]), np.linalg.norm(z[:n1]))

    def differential(z):
        z1, z2 = z[:n1], z[n1:]
        r1, r2 = np.linalg.norm(z1), np.linalg.norm(z2)
        if r1 == 0.0 or r2 == 0.0:
            raise NondifferentiablePoint("desitter_arccos", float(evaluate(z)))
        tot = r1 * r1 + r2 * r2
        return np.concatenate([-2.0 * (r2 / r1) * z1 / tot, 2.0 * (r1 / r2) * z2 / tot])

    def sampler(level, rng):
        u1 = rng.standard_normal(n1)
        u2 = rng.standard_normal(n2)
        return np.concatenate([
            math.cos(level / 2.0) * u1 / np.linalg.norm(u1),
            math.sin(level / 2.0) * u2 / np.linalg.norm(u2),
        ])

    image = Interval(0.0, math.pi)
    profile = ProfileFunction.constant(4.0, image)
    return TransnormalFunction(label, model, evaluate, differential, profile,
                               (0.0, math.pi), image, sampler, {"split": [n1, n2]})


def sphere_polar_distance(n: int, axis: Optional[int] = None,
                          label: str = "sphere_polar_distance") -> TransnormalFunction:
    """Distance to a pole on S^n: arccos(x_axis), evaluated via atan2."""
    model = geo.pseudo_sphere(n)
    m = n + 1
    k = m - 1 if axis is None else int(axis)
    if not 0 <= k < m:
        raise BadAxis(f"axis {axis} outside 0..{m - 1}")
    others = [i for i in range(m) if i != k]

    def evaluate(x):
        return math.atan2(np.linalg.norm(x[others]), x[k])

    def differential(x):
        perp = x[others]
        rho = np.linalg.norm(perp)
        if rho == 0.0:
            raise NondifferentiablePoint("sphere_polar_distance", float(evaluate(x)))
        tot = rho * rho + x[k] * x[k]
        d = np.empty(m)
        d[k] = -rho / tot
        d[others] = x[k] * perp / (rho * tot)
        return d

    def sampler(level, rng):
        u = rng.standard_normal(m)
        u[k] = 0.0
        u /= np.linalg.norm(u)
        x = math.sin(level) * u
        x[k] = math.cos(level)
        return x

    profile = distance_profile(math.pi)
    return TransnormalFunction(label, model, evaluate, differential, profile,
                               (0.0, math.pi), profile.domain, sampler, {"n": n, "axis": k})


def hyperbolic_point_distance(n: int, label: str = "hyperbolic_point_distance") -> TransnormalFunction:
    """Distance to the base point (0, ..., 0, 1) of H^n: arccosh(x_last)."""
    model = geo.hyperbolic(n)

    def evaluate(x):
        return math.atanh(min(1.0, np.linalg.norm(x[:-1]) / x[-1])) if x[-1] > 0 else math.inf

    def differential(x):
        y, h = x[:-1], x[-1]
        rho = np.linalg.norm(y)
        if rho == 0.0:
            raise NondifferentiablePoint("hyperbolic_point_distance", 0.0)
        den = h * h - rho * rho
        return np.concatenate([h * y / (rho * den), [-rho / den]])

    def sampler(level, rng):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        return np.concatenate([math.sinh(level) * u, [math.cosh(level)]])

    profile = distance_profile(math.inf)
    return TransnormalFunction(label, model, evaluate, differential, profile, (0.0,),
                               profile.domain, sampler, {"n": n})


def line_identity(label: str = "line_identity") -> TransnormalFunction:
    """f(x) = x on the real line; the simplest profile-one function."""
    model = geo.semi_euclidean(1)
    one = np.ones(1)

    def sampler(level, rng):
        return np.array([float(level)])

    profile = ProfileFunction.constant(1.0, Interval.real_line())
    return TransnormalFunction(label, model, lambda x: float(x[0]), lambda x: one, profile,
                               (), Interval.real_line(), sampler, {})


# -- verification -----------------------------------------------------------------

def _regular(f: TransnormalFunction, t: float) -> bool:
    if not math.isfinite(t):
        return False
    if any(abs(t - c) <= REGULAR_EPS for c in f.focal_values):
        return False
    return abs(f.profile(t)) >= REGULAR_EPS


def verify_transnormal(f: TransnormalFunction, count: int = 1000, seed: int = 0,
                       tol: float = 1e-8, mode: str = "analytic", h: Optional[float] = None):
    """Sample regular points and compare <grad f, grad f> with a(f)."""
    from .verify import ResidualReport

    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    model = f.model
    errs, points = [], []
    attempts = 0
    while len(errs) < count:
        attempts += 1
        if attempts > 100 * count:
            raise NoRegularPoints(
                f"only {len(errs)} regular points of {f.label} found in {attempts - 1} draws"
            )
        x = model.random_point(rng)
        try:
            t = f.value(x)
            if not _regular(f, t):
                continue
            g = geo.gradient(model, f, x, mode=mode, h=h)
            nrm = geo.inner_g(model, x, g, g)
        except TranspdeError:
            continue
        errs.append(abs(nrm - f.profile(t)))
        points.append(x)
    return ResidualReport.from_errors(errs, points, model, tol, mode, seed)


# -- registry ---------------------------------------------------------------------

def _hahn_from(params: dict, label: str) -> TransnormalFunction:
    n = int(params.get("n", 3))
    s = int(params.get("s", 0))
    A = params.get("A")
    A = np.eye(n) if A is None else np.asarray(A, dtype=float)
    a_vec = params.get("a")
    a_vec = np.zeros(n) if a_vec is None else np.asarray(a_vec, dtype=float)
    alpha = float(params.get("alpha", 1.0))
    image = params.get("image")
    if image is not None:
        image = interval_from_json(image)
    return hahn_quadratic(A, a_vec, alpha, geo.Signature(n, s), image, label=label)


def _cm_from(params: dict, label: str) -> TransnormalFunction:
    ell = int(params.get("ell", 1))
    n = int(params.get("n", 2 if ell == 1 else 3))
    s = int(params.get("s", 0))
    image = params.get("image")
    if image is not None:
        image = interval_from_json(image)
    split = params.get("split")
    return cartan_munzner(ell, geo.pseudo_sphere(n, s), split=split, axis=params.get("axis"),
                          image=image, label=label)


def _desitter_from(params: dict, label: str) -> TransnormalFunction:
    n1, n2 = params.get("split", [2, 2])
    return desitter_arccos(int(n1), int(n2), label=label)


FACTORIES = {
    "hahn_quadratic": _hahn_from,
    "cartan_munzner": _cm_from,
    "desitter_arccos": _desitter_from,
    "sphere_polar_distance": lambda p, lab: sphere_polar_distance(
        int(p.get("n", 2)), p.get("axis"), label=lab),
    "hyperbolic_point_distance": lambda p, lab: hyperbolic_point_distance(
        int(p.get("n", 2)), label=lab),
    "line_identity": lambda p, lab: line_identity(label=lab),
}

# label -> (factory, parameters); order is the listing order
CATALOG = {
    "hahn_quadratic": ("hahn_quadratic", {"n": 3, "alpha": 1.0}),
    "hahn_linear": ("hahn_quadratic", {"n": 3, "A": [[0, 0, 0]] * 3, "a": [1, 0, 0], "alpha": 0.0}),
    "hahn_cylinder": ("hahn_quadratic", {"n": 3, "A": [[1, 0, 0], [0, 1, 0], [0, 0, 0]],
                                          "alpha": 1.0}),
    "hahn_shifted": ("hahn_quadratic", {"n": 3, "A": [[2, 0, 0], [0, 2, 0], [0, 0, 2]],
                                         "a": [1, 0, 0], "alpha": 2.0}),
    "hahn_lorentz_quadric": ("hahn_quadratic", {"n": 3, "s": 1, "alpha": 1.0}),
    "cartan_munzner_l1": ("cartan_munzner", {"ell": 1, "n": 2}),
    "cartan_munzner_l2": ("cartan_munzner", {"ell": 2, "n": 3, "split": [2, 2]}),
    "desitter_arccos": ("desitter_arccos", {"split": [2, 2]}),
    "sphere_polar_distance": ("sphere_polar_distance", {"n": 2}),
    "hyperbolic_point_distance": ("hyperbolic_point_distance", {"n": 2}),
    "line_identity": ("line_identity", {}),
}


def interval_from_json(v) -> Interval:
    lo, hi = v
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    return Interval(lo, hi, math.isfinite(lo), math.isfinite(hi))


def build(name: str, params: Optional[dict] = None) -> TransnormalFunction:
    """Catalog label (optionally with parameter overrides) or factory name."""
    params = dict(params or {})
    if name in CATALOG:
        factory, base = CATALOG[name]
        merged = {**base, **params}
        return FACTORIES[factory](merged, name)
    if name in FACTORIES:
        return FACTORIES[name](params, name)
    raise KeyError(f"unknown transnormal function {name!r}")


def builtin() -> list:
    return [build(label) for label in CATALOG]


MANIFOLDS = [
    {"kind": geo.SEMI_EUCLIDEAN, "params": ["n", "s"], "metric": "diag(-1 x s, +1 x (n-s))"},
    {"kind": geo.PSEUDO_SPHERE, "params": ["n", "s"], "constraint": "<x,x> = 1 in R^{n+1}_s"},
    {"kind": geo.HYPERBOLIC, "params": ["n"], "constraint": "<x,x> = -1, x_{n+1} > 0"},
    {"kind": geo.WARPED_PRODUCT, "params": ["base", "fiber", "warp"],
     "metric": "-g_L + alpha^2 g_N"},
]


def catalog() -> dict:
    return {
        "manifolds": MANIFOLDS,
        "factories": sorted(FACTORIES),
        "transnormal_functions": [f.describe() for f in builtin()],
    }
