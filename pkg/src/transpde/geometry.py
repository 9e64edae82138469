"""Manifold models, metrics and gradients.

Four kinds of model are supported:

* ``semi_euclidean``: R^n_s in global chart coordinates, metric
  ``diag(-1, ..., -1, +1, ..., +1)`` with the ``s`` negative directions first;
* ``pseudo_sphere``: the quadric <x,x> = 1 in R^{n+1}_s;
* ``hyperbolic``: the upper sheet of <x,x> = -1 in R^{n+1}_1 (time last);
* ``warped_product``: L x N with metric -g_L + alpha^2 g_N, where
  alpha = warp(warp_base(x)) depends on the base point only.

Embedded models work in ambient coordinates.  At each point the tangent space
gets a Euclidean-orthonormal basis ``B`` (columns), and "chart components"
of metrics and vectors are taken with respect to that basis, so the metric
matrix is ``B^T eta B``.  Scalar fields are duck-typed: anything with
``value(coords) -> float`` and, for analytic gradients, ``differential(coords)``
returning the ambient (or chart) partial derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    FieldEvaluationFailure,
    NonpositiveWarping,
    PointOffManifold,
    ProjectionDivergence,
    SingularLevel,
    TranspdeError,
)
from .profiles import ProfileFunction

EPS = np.finfo(float).eps
CONSTRAINT_TOL = 1e-9

SEMI_EUCLIDEAN = "semi_euclidean"
PSEUDO_SPHERE = "pseudo_sphere"
HYPERBOLIC = "hyperbolic"
WARPED_PRODUCT = "warped_product"


@dataclass(frozen=True)
class Signature:
    dimension: int
    negative_count: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if not 0 <= self.negative_count <= self.dimension:
            raise ValueError(
                f"negative_count must lie in [0, {self.dimension}], "
                f"got {self.negative_count}"
            )

    @property
    def riemannian(self) -> bool:
        return self.negative_count == 0

    def eta(self) -> np.ndarray:
        d = np.ones(self.dimension)
        d[: self.negative_count] = -1.0
        return d


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    kind: str
    signature: Signature
    eta: tuple = ()
    level: Optional[float] = None
    base: Optional["ManifoldModel"] = None
    fiber: Optional["ManifoldModel"] = None
    warp: Optional[ProfileFunction] = None
    warp_base: Optional[Callable[[np.ndarray], float]] = None
    name: str = ""

    @property
    def embedded(self) -> bool:
        return self.kind in (PSEUDO_SPHERE, HYPERBOLIC)

    @property
    def representation(self) -> str:
        if self.kind == SEMI_EUCLIDEAN:
            return "chart"
        if self.kind == WARPED_PRODUCT:
            return "product"
        return "ambient-embedding"

    @property
    def coord_dim(self) -> int:
        if self.kind == WARPED_PRODUCT:
            return self.base.coord_dim + self.fiber.coord_dim
        return len(self.eta)

    @property
    def dimension(self) -> int:
        return self.signature.dimension

    def split(self, x: np.ndarray):
        k = self.base.coord_dim
        return x[:k], x[k:]

    def describe(self) -> dict:
        out = {
            "kind": self.kind,
            "dimension": self.dimension,
            "negative_count": self.signature.negative_count,
        }
        if self.name:
            out["name"] = self.name
        if self.kind == WARPED_PRODUCT:
            out["base"] = self.base.describe()
            out["fiber"] = self.fiber.describe()
            out["warp"] = self.warp.formula
        return out

    # -- constraints ---------------------------------------------------------

    def ambient_norm2(self, x: np.ndarray) -> float:
        return float(np.dot(np.asarray(self.eta) * x, x))

    def check(self, x: np.ndarray) -> None:
        if x.shape != (self.coord_dim,):
            raise DimensionMismatch(
                f"{self.kind} expects {self.coord_dim} coordinates, got {x.shape}"
            )
        if self.kind == PSEUDO_SPHERE:
            q = self.ambient_norm2(x)
            if abs(q - 1.0) > CONSTRAINT_TOL:
                raise PointOffManifold(f"<x,x> = {q!r}, expected 1")
        elif self.kind == HYPERBOLIC:
            q = self.ambient_norm2(x)
            if abs(q + 1.0) > CONSTRAINT_TOL or x[-1] <= 0:
                raise PointOffManifold(
                    f"<x,x> = {q!r}, last coordinate {x[-1]!r}; expected -1 and > 0"
                )
        elif self.kind == WARPED_PRODUCT:
            xl, xn = self.split(x)
            self.base.check(xl)
            self.fiber.check(xn)

    def retract(self, x: np.ndarray) -> np.ndarray:
        """Map a nearby ambient point back onto the model."""
        if self.kind == PSEUDO_SPHERE:
            q = self.ambient_norm2(x)
            if q <= 0:
                raise PointOffManifold(f"cannot project point with <x,x> = {q!r}")
            return x / np.sqrt(q)
        if self.kind == HYPERBOLIC:
            q = -self.ambient_norm2(x)
            if q <= 0:
                raise PointOffManifold(f"cannot project point with <x,x> = {-q!r}")
            y = x / np.sqrt(q)
            return y if y[-1] > 0 else -y
        if self.kind == WARPED_PRODUCT:
            xl, xn = self.split(x)
            return np.concatenate([self.base.retract(xl), self.fiber.retract(xn)])
        return x

    # -- tangent spaces ------------------------------------------------------

    def tangent_basis(self, x: np.ndarray) -> np.ndarray:
        """Euclidean-orthonormal basis of the tangent space (columns)."""
        if self.kind == SEMI_EUCLIDEAN:
            return np.eye(self.coord_dim)
        if self.kind == WARPED_PRODUCT:
            xl, xn = self.split(x)
            bl, bn = self.base.tangent_basis(xl), self.fiber.tangent_basis(xn)
            out = np.zeros((self.coord_dim, self.dimension))
            out[: bl.shape[0], : bl.shape[1]] = bl
            out[bl.shape[0]:, bl.shape[1]:] = bn
            return out
        # Householder reflection sending the normal eta*x to a coordinate axis;
        # its remaining columns span the eta-orthogonal complement of x.
        nrm = np.asarray(self.eta) * x
        u = nrm / np.linalg.norm(nrm)
        k = int(np.argmax(np.abs(u)))
        v = u.copy()
        v[k] += 1.0 if u[k] >= 0 else -1.0
        q = np.eye(len(u)) - 2.0 * np.outer(v, v) / np.dot(v, v)
        return np.delete(q, k, axis=1)

    def warping(self, x: np.ndarray) -> float:
        xl, _ = self.split(x)
        t = self.warp_base(xl) if self.warp_base is not None else float(xl[0])
        alpha = float(self.warp(t))
        if not alpha > 0:
            raise NonpositiveWarping(f"warping function is {alpha!r} at t = {t!r}")
        return alpha

    def basis_metric(self, x: np.ndarray) -> np.ndarray:
        if self.kind == SEMI_EUCLIDEAN:
            return np.diag(np.asarray(self.eta, dtype=float))
        if self.kind == WARPED_PRODUCT:
            xl, xn = self.split(x)
            gl = self.base.basis_metric(xl)
            gn = self.fiber.basis_metric(xn)
            alpha = self.warping(x)
            m, k = gl.shape[0], gn.shape[0]
            g = np.zeros((m + k, m + k))
            g[:m, :m] = -gl
            g[m:, m:] = alpha**2 * gn
            return g
        b = self.tangent_basis(x)
        g = b.T @ (np.asarray(self.eta)[:, None] * b)
        return 0.5 * (g + g.T)

    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        if self.kind == SEMI_EUCLIDEAN:
            return scale * rng.standard_normal(self.coord_dim)
        if self.kind == PSEUDO_SPHERE:
            s = self.signature.negative_count
            y = scale * rng.standard_normal(s)
            u = rng.standard_normal(self.coord_dim - s)
            u /= np.linalg.norm(u)
            return np.concatenate([y, np.sqrt(1.0 + y @ y) * u])
        if self.kind == HYPERBOLIC:
            y = scale * rng.standard_normal(self.coord_dim - 1)
            return np.concatenate([y, [np.sqrt(1.0 + y @ y)]])
        return np.concatenate(
            [self.base.random_point(rng, scale), self.fiber.random_point(rng, scale)]
        )


# -- constructors ---------------------------------------------------------------

def semi_euclidean(n: int, s: int = 0) -> ManifoldModel:
    sig = Signature(n, s)
    return ManifoldModel(SEMI_EUCLIDEAN, sig, tuple(sig.eta()), name=f"R^{n}_{s}")


def pseudo_sphere(n: int, s: int = 0) -> ManifoldModel:
    if s > n:
        raise ValueError(f"pseudo-sphere index {s} exceeds dimension {n}")
    amb = Signature(n + 1, s)
    return ManifoldModel(
        PSEUDO_SPHERE, Signature(n, s), tuple(amb.eta()), level=1.0,
        name=f"S^{n}_{s}",
    )


def hyperbolic(n: int) -> ManifoldModel:
    eta = np.ones(n + 1)
    eta[-1] = -1.0
    return ManifoldModel(HYPERBOLIC, Signature(n, 0), tuple(eta), level=-1.0, name=f"H^{n}")


def warped_product(
    base: ManifoldModel,
    fiber: ManifoldModel,
    warp: ProfileFunction,
    warp_base: Optional[Callable[[np.ndarray], float]] = None,
    name: str = "",
) -> ManifoldModel:
    """L x_alpha N with g = -g_L + alpha^2 g_N.

    ``warp_base`` is the transnormal function f_L on the base through which
    the warping factors; it defaults to the first base coordinate.
    """
    if not (base.signature.riemannian and fiber.signature.riemannian):
        raise ValueError("warped product factors must be Riemannian")
    n = base.dimension + fiber.dimension
    return ManifoldModel(
        WARPED_PRODUCT,
        Signature(n, base.dimension),
        base=base,
        fiber=fiber,
        warp=warp,
        warp_base=warp_base,
        name=name or f"{base.name} x_alpha {fiber.name}",
    )


@dataclass(frozen=True, eq=False)
class ChartPoint:
    coords: np.ndarray
    model: ManifoldModel
    representation: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        if not self.representation:
            object.__setattr__(self, "representation", self.model.representation)
        if self.coords.shape != (self.model.coord_dim,):
            raise DimensionMismatch(
                f"expected {self.model.coord_dim} coordinates, got {self.coords.shape}"
            )


def coords_of(point) -> np.ndarray:
    if isinstance(point, ChartPoint):
        return point.coords
    return np.asarray(point, dtype=float)


# -- metric operations ----------------------------------------------------------

def metric_at(model: ManifoldModel, point) -> np.ndarray:
    """Components g_ij of the metric in the point's tangent basis."""
    x = coords_of(point)
    model.check(x)
    return model.basis_metric(x)


def symmetric_inverse(g: np.ndarray) -> np.ndarray:
    inv = np.linalg.solve(g, np.eye(g.shape[0]))
    return 0.5 * (inv + inv.T)


def inverse_metric_at(model: ManifoldModel, point) -> np.ndarray:
    """Components g^ij; block form -g_L^ij, alpha^-2 g_N^ij on warped products."""
    x = coords_of(point)
    model.check(x)
    if model.kind == SEMI_EUCLIDEAN:
        return np.diag(np.asarray(model.eta, dtype=float))
    if model.kind == WARPED_PRODUCT:
        xl, xn = model.split(x)
        il = inverse_metric_at(model.base, xl)
        in_ = inverse_metric_at(model.fiber, xn)
        alpha = model.warping(x)
        m, k = il.shape[0], in_.shape[0]
        out = np.zeros((m + k, m + k))
        out[:m, :m] = -il
        out[m:, m:] = in_ / alpha**2
        return out
    return symmetric_inverse(model.basis_metric(x))


def default_step(x: np.ndarray) -> float:
    return float(np.cbrt(EPS) * max(1.0, float(np.max(np.abs(x)))))


def basis_partials(model: ManifoldModel, field, x: np.ndarray, mode: str = "analytic",
                   h: Optional[float] = None) -> np.ndarray:
    """Directional derivatives du(E_k) along the tangent basis vectors."""
    b = model.tangent_basis(x)
    if mode == "analytic":
        diff = getattr(field, "differential", None)
        if diff is None:
            raise ValueError("field has no analytic differential; use finite-difference mode")
        try:
            d = np.asarray(diff(x), dtype=float)
        except TranspdeError as exc:
            raise FieldEvaluationFailure(str(exc)) from exc
        return b.T @ d
    if mode != "finite-difference":
        raise ValueError(f"unknown gradient mode {mode!r}")
    step = default_step(x) if h is None else float(h)
    out = np.empty(b.shape[1])
    for k in range(b.shape[1]):
        try:
            up = field.value(model.retract(x + step * b[:, k]))
            dn = field.value(model.retract(x - step * b[:, k]))
        except TranspdeError as exc:
            raise FieldEvaluationFailure(
                f"field undefined at stencil point (direction {k}, h={step}): {exc}"
            ) from exc
        out[k] = (up - dn) / (2.0 * step)
    return out


def gradient(model: ManifoldModel, field, point, mode: str = "analytic",
             h: Optional[float] = None) -> np.ndarray:
    """Components of grad_g u = sum_j (sum_k g^jk du_k) E_j in the tangent basis."""
    x = coords_of(point)
    model.check(x)
    c = basis_partials(model, field, x, mode, h)
    return symmetric_inverse(model.basis_metric(x)) @ c


def inner_g(model: ManifoldModel, point, v: Sequence[float], w: Sequence[float]) -> float:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (model.dimension,) or w.shape != (model.dimension,):
        raise DimensionMismatch(
            f"tangent vectors must have {model.dimension} components, "
            f"got {v.shape} and {w.shape}"
        )
    return float(v @ metric_at(model, point) @ w)


def ambient_vector(model: ManifoldModel, point, components: np.ndarray) -> np.ndarray:
    """Tangent vector as an ambient (or chart) coordinate vector."""
    return model.tangent_basis(coords_of(point)) @ np.asarray(components)


def warped_split(model: ManifoldModel, field, point, mode: str = "analytic",
                 h: Optional[float] = None):
    """Factor-wise gradients (grad_{g_L} u, grad_{g_N} u) and the warping alpha.

    The full gradient is ``-grad_L + alpha**-2 grad_N`` (block concatenation).
    """
    if model.kind != WARPED_PRODUCT:
        raise ValueError("warped_split needs a warped_product model")
    x = coords_of(point)
    model.check(x)
    c = basis_partials(model, field, x, mode, h)
    xl, xn = model.split(x)
    m = model.base.dimension
    gl = symmetric_inverse(model.base.basis_metric(xl)) @ c[:m]
    gn = symmetric_inverse(model.fiber.basis_metric(xn)) @ c[m:]
    return gl, gn, model.warping(x)


def warped_norm_split(model: ManifoldModel, field, point, mode: str = "analytic",
                      h: Optional[float] = None) -> float:
    """-|grad_L u|^2 + alpha^-2 |grad_N u|^2 computed factor by factor."""
    gl, gn, alpha = warped_split(model, field, point, mode, h)
    x = coords_of(point)
    xl, xn = model.split(x)
    nl = float(gl @ model.base.basis_metric(xl) @ gl)
    nn = float(gn @ model.fiber.basis_metric(xn) @ gn)
    return -nl + nn / alpha**2


# -- level sets -----------------------------------------------------------------

LEVEL_TOL = 1e-9
_PROJECTION_ITERS = 50
_PROJECTION_RESTARTS = 20


def _newton_project(f, x: np.ndarray, level: float) -> Optional[np.ndarray]:
    model = f.model
    for _ in range(_PROJECTION_ITERS):
        try:
            r = f.value(x) - level
            if abs(r) <= 1e-13 * max(1.0, abs(level)):
                return x
            b = model.tangent_basis(x)
            c = b.T @ np.asarray(f.differential(x), dtype=float)
            v = symmetric_inverse(model.basis_metric(x)) @ c
            nrm = float(c @ v)
            if abs(nrm) < 1e-300:
                return None
            x_new = model.retract(x - (r / nrm) * (b @ v))
        except (TranspdeError, FloatingPointError, np.linalg.LinAlgError):
            return None
        if np.allclose(x_new, x, rtol=0, atol=4 * EPS * max(1.0, np.abs(x).max())):
            x = x_new
            break
        x = x_new
    try:
        return x if abs(f.value(x) - level) <= LEVEL_TOL else None
    except TranspdeError:
        return None


def _check_level(f, level: float) -> None:
    image = f.image
    if not image.is_interior(level):
        raise SingularLevel(f"level {level!r} is not interior to Im f = {image}")
    if abs(f.profile(level)) <= 1e-12 or any(abs(level - c) <= 1e-12 for c in f.focal_values):
        raise SingularLevel(f"level {level!r} is a focal value of {f.label}")


def sample_level_set(f, level: float, count: int, seed: int) -> list:
    """``count`` reproducible points with |f(x) - level| <= 1e-9.

    Closed-form constructions are used when the transnormal function supplies
    one; otherwise random points are projected along grad f by Newton's method.
    """
    _check_level(f, level)
    rng = np.random.default_rng(seed)
    model = f.model
    points = []
    for _ in range(count):
        x = None
        if f.level_sampler is not None:
            x = f.level_sampler(level, rng)
            if abs(f.value(x) - level) > LEVEL_TOL:
                x = _newton_project(f, x, level)
        else:
            for _ in range(_PROJECTION_RESTARTS):
                x = _newton_project(f, model.random_point(rng), level)
                if x is not None:
                    break
        if x is None:
            raise ProjectionDivergence(
                f"Newton projection onto {f.label} = {level!r} failed "
                f"within {_PROJECTION_ITERS} iterations"
            )
        points.append(ChartPoint(x, model))
    return points


def sample_product_level(model: ManifoldModel, f_base, f_fiber, levels, count: int,
                         seed: int) -> list:
    """Points of f_L^-1(t) x f_N^-1(s) on a warped product."""
    t, s = levels
    ss = np.random.SeedSequence(seed).spawn(2)
    seed_l = int(ss[0].generate_state(1)[0])
    seed_n = int(ss[1].generate_state(1)[0])
    xl = sample_level_set(f_base, t, count, seed_l)
    xn = sample_level_set(f_fiber, s, count, seed_n)
    return [ChartPoint(np.concatenate([a.coords, b.coords]), model) for a, b in zip(xl, xn)]
