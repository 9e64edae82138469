from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from transpde import geometry as geo
from transpde import transnormal as tn
from transpde.errors import (
    DimensionMismatch,
    FieldEvaluationFailure,
    NonpositiveWarping,
    PointOffManifold,
    SingularLevel,
)
from transpde.profiles import Interval, ProfileFunction


class Field:
    """Scalar field from a value function and its coordinate differential."""

    def __init__(self, value, differential=None):
        self._value = value
        self._diff = differential

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=float)))

    def differential(self, x):
        return np.asarray(self._diff(np.asarray(x, dtype=float)), dtype=float)


def desitter_product():
    warp = ProfileFunction.from_formula("cosh(t)", Interval.real_line())
    return geo.warped_product(geo.semi_euclidean(1), geo.pseudo_sphere(3), warp)


def models():
    return [
        geo.semi_euclidean(3),
        geo.semi_euclidean(3, 1),
        geo.pseudo_sphere(2),
        geo.pseudo_sphere(3, 1),
        geo.hyperbolic(2),
        desitter_product(),
    ]


class TestSignature:
    def test_bounds(self):
        with pytest.raises(ValueError):
            geo.Signature(3, 4)
        with pytest.raises(ValueError):
            geo.Signature(0)

    def test_eta(self):
        assert geo.Signature(3, 1).eta().tolist() == [-1.0, 1.0, 1.0]


class TestMetric:
    def test_lorentz_flat(self):
        m = geo.semi_euclidean(3, 1)
        assert np.array_equal(geo.metric_at(m, [0.3, 1.0, 2.0]), np.diag([-1.0, 1.0, 1.0]))
        assert np.array_equal(geo.inverse_metric_at(m, [0.0, 0.0, 0.0]), np.diag([-1.0, 1.0, 1.0]))

    def test_warped_at_origin(self):
        m = desitter_product()
        z = np.array([1.0, 0.0, 0.0, 0.0])
        g = geo.metric_at(m, np.concatenate([[0.0], z]))
        assert g[0, 0] == -1.0
        assert np.allclose(g[1:, 1:], np.eye(3), atol=1e-15)
        assert np.allclose(g[0, 1:], 0.0)

    def test_warped_scaling(self):
        m = desitter_product()
        z = np.array([0.0, 1.0, 0.0, 0.0])
        g = geo.metric_at(m, np.concatenate([[1.0], z]))
        assert np.allclose(g[1:, 1:], math.cosh(1.0) ** 2 * np.eye(3), rtol=1e-14)
        assert math.cosh(1.0) ** 2 == pytest.approx(2.381097845541, rel=1e-12)

    def test_warped_inverse_blocks(self):
        m = desitter_product()
        x = np.concatenate([[0.7], [0.0, 0.0, 1.0, 0.0]])
        gi = geo.inverse_metric_at(m, x)
        assert gi[0, 0] == -1.0
        assert np.allclose(gi[1:, 1:], np.eye(3) / math.cosh(0.7) ** 2, rtol=1e-14)

    @pytest.mark.parametrize("model", models(), ids=lambda m: m.name)
    def test_metric_times_inverse(self, model):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = model.random_point(rng)
            g = geo.metric_at(model, x)
            assert np.array_equal(g, g.T)
            prod = g @ geo.inverse_metric_at(model, x)
            assert np.abs(prod - np.eye(model.dimension)).max() <= 1e-10

    def test_random_spd_inverse(self):
        rng = np.random.default_rng(5)
        b = rng.normal(size=(5, 5))
        spd = b @ b.T + 5 * np.eye(5)
        assert np.abs(spd @ geo.symmetric_inverse(spd) - np.eye(5)).max() <= 1e-10

    def test_off_manifold(self):
        with pytest.raises(PointOffManifold):
            geo.metric_at(geo.pseudo_sphere(2), [1.0, 1.0, 0.0])
        with pytest.raises(PointOffManifold):
            geo.metric_at(geo.hyperbolic(2), [0.0, 0.0, -1.0])

    def test_nonpositive_warp(self):
        warp = ProfileFunction.from_formula("t", Interval.real_line())
        m = geo.warped_product(geo.semi_euclidean(1), geo.pseudo_sphere(2), warp)
        with pytest.raises(NonpositiveWarping):
            geo.metric_at(m, [-1.0, 1.0, 0.0, 0.0])

    def test_point_length(self):
        with pytest.raises(DimensionMismatch):
            geo.ChartPoint([1.0, 0.0], geo.pseudo_sphere(2))

    def test_retract_constraints(self):
        rng = np.random.default_rng(0)
        for model in (geo.pseudo_sphere(3, 1), geo.hyperbolic(3)):
            x = model.random_point(rng)
            y = model.retract(x + 1e-3 * rng.normal(size=x.shape))
            assert abs(model.ambient_norm2(y) - model.level) <= 1e-12


class TestGradient:
    def test_euclidean_square(self):
        m = geo.semi_euclidean(3)
        u = Field(lambda x: x @ x, lambda x: 2 * x)
        assert np.allclose(geo.gradient(m, u, [1.0, 0.0, 0.0]), [2.0, 0.0, 0.0])

    def test_negative_direction(self):
        m = geo.semi_euclidean(3, 1)
        u = Field(lambda x: x[0], lambda x: np.array([1.0, 0.0, 0.0]))
        assert np.array_equal(geo.gradient(m, u, [0.2, 0.1, 0.0]), [-1.0, 0.0, 0.0])

    @pytest.mark.parametrize("model", models(), ids=lambda m: m.name)
    def test_fd_matches_analytic(self, model):
        rng = np.random.default_rng(11)
        k = model.coord_dim
        c = rng.normal(size=k)
        u = Field(lambda x: (c @ x) ** 2 + x[0] * x[-1],
                  lambda x: 2 * (c @ x) * c + np.eye(k)[0] * x[-1] + np.eye(k)[-1] * x[0])
        for _ in range(20):
            x = model.random_point(rng)
            ga = geo.gradient(model, u, x, "analytic")
            gf = geo.gradient(model, u, x, "finite-difference")
            assert np.abs(ga - gf).max() <= 1e-6 * max(1.0, np.abs(ga).max())

    def test_warped_lemma_split(self):
        m = desitter_product()
        # u(t, z) = t * z_3: grad splits as -h dt + alpha^-2 t grad_N h
        u = Field(lambda x: x[0] * x[3],
                  lambda x: np.array([x[3], 0.0, 0.0, x[0], 0.0]))
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = m.random_point(rng)
            gl, gn, alpha = geo.warped_split(m, u, x)
            full = geo.gradient(m, u, x)
            assert np.allclose(full, np.concatenate([-gl, gn / alpha**2]), atol=1e-13)
            assert gl[0] == pytest.approx(x[3], abs=1e-14)
            direct = geo.inner_g(m, x, full, full)
            assert direct == pytest.approx(geo.warped_norm_split(m, u, x), abs=1e-9)

    def test_field_failure_on_stencil(self):
        from transpde.errors import DomainError

        def value(x):
            if x[0] > 0:
                raise DomainError("sqrt", -x[0])
            return 0.0

        with pytest.raises(FieldEvaluationFailure):
            geo.gradient(geo.semi_euclidean(1), Field(value), [0.0], "finite-difference")


class TestInner:
    def test_timelike(self):
        m = geo.semi_euclidean(3, 1)
        assert geo.inner_g(m, [0, 0, 0], [1, 0, 0], [1, 0, 0]) == -1.0

    def test_double_sum(self):
        rng = np.random.default_rng(9)
        m = geo.pseudo_sphere(3, 1)
        x = m.random_point(rng)
        g = geo.metric_at(m, x)
        v, w = rng.normal(size=3), rng.normal(size=3)
        brute = sum(v[i] * g[i, j] * w[j] for i in range(3) for j in range(3))
        assert geo.inner_g(m, x, v, w) == pytest.approx(brute, abs=1e-13)
        assert geo.inner_g(m, x, v, w) == pytest.approx(geo.inner_g(m, x, w, v), abs=1e-14)

    def test_fiber_only_field(self):
        m = desitter_product()
        u = Field(lambda x: x[1], lambda x: np.array([0.0, 1.0, 0.0, 0.0, 0.0]))
        x = np.array([0.4, 0.6, 0.8, 0.0, 0.0])
        g = geo.gradient(m, u, x)
        gl, gn, alpha = geo.warped_split(m, u, x)
        nn = float(gn @ gn)
        assert geo.inner_g(m, x, g, g) == pytest.approx(nn / math.cosh(0.4) ** 2, abs=1e-14)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            geo.inner_g(geo.semi_euclidean(3), [0, 0, 0], [1, 0], [1, 0, 0])


class TestLevelSets:
    def test_equator(self):
        f = tn.cartan_munzner(1, geo.pseudo_sphere(2))
        pts = geo.sample_level_set(f, 0.0, 50, seed=1)
        assert all(abs(p.coords[2]) <= 1e-9 for p in pts)

    def test_desitter_product_levels(self):
        f = tn.desitter_arccos(2, 2)
        s0 = 1.1
        for p in geo.sample_level_set(f, s0, 50, seed=2):
            z = p.coords
            assert abs(z[:2] @ z[:2] - z[2:] @ z[2:] - math.cos(s0)) <= 1e-9

    def test_hahn_sphere_of_radius_two(self):
        f = tn.hahn_quadratic(np.eye(3), np.zeros(3), 1.0, geo.Signature(3))
        for p in geo.sample_level_set(f, 4.0, 50, seed=3):
            assert abs(np.linalg.norm(p.coords) - 2.0) <= 1e-9

    def test_newton_projection_path(self):
        f = replace(tn.cartan_munzner(2, geo.pseudo_sphere(3)), level_sampler=None)
        for p in geo.sample_level_set(f, 0.3, 20, seed=4):
            assert abs(f.value(p) - 0.3) <= 1e-9

    def test_seed_determinism(self):
        f = tn.cartan_munzner(2, geo.pseudo_sphere(3))
        a = geo.sample_level_set(f, -0.2, 10, seed=7)
        b = geo.sample_level_set(f, -0.2, 10, seed=7)
        assert all(np.array_equal(p.coords, q.coords) for p, q in zip(a, b))

    def test_singular_level(self):
        f = tn.cartan_munzner(1, geo.pseudo_sphere(2))
        with pytest.raises(SingularLevel):
            geo.sample_level_set(f, 1.0, 5, seed=0)
