from __future__ import annotations

import math

import numpy as np
import pytest

from transpde import reduce1d as r1
from transpde import transnormal as tn
from transpde.errors import NoValidSamples, SingularLevel
from transpde.expr import parse
from transpde.verify import ResidualReport, invariance_check, manifold_residual

VARS = ["t", "r", "p"]


class Composite:
    """u = w(f(x)) with a closed-form w."""

    def __init__(self, f, w, dw, lo=-0.95, hi=0.95):
        self.f, self.w, self.dw, self.lo, self.hi = f, w, dw, lo, hi

    def value(self, x):
        return self.w(self.f.value(x))

    def differential(self, x):
        return self.dw(self.f.value(x)) * np.asarray(self.f.differential(x))

    def sample_parameters(self, rng):
        return float(rng.uniform(self.lo, self.hi))


def latitude():
    f = tn.build("cartan_munzner_l1")
    return f, Composite(f, lambda t: math.pi / 2 - math.acos(t), lambda t: 1 / math.sqrt(1 - t * t))


class TestManifoldResidual:
    def test_latitude_fd(self):
        f, u = latitude()
        rep = manifold_residual(f.model, parse("p - 1", VARS), u, f, count=200, tol=1e-4,
                                gradient_mode="finite-difference", h=1e-5)
        assert rep.passed and rep.sample_count == 200

    def test_latitude_analytic(self):
        f, u = latitude()
        rep = manifold_residual(f.model, parse("p - 1", VARS), u, f, count=200, tol=1e-9,
                                gradient_mode="analytic")
        assert rep.passed, rep.max_abs

    def test_constant_field(self):
        f = tn.build("cartan_munzner_l2")
        u = Composite(f, lambda t: 1.5, lambda t: 0.0)
        rep = manifold_residual(f.model, parse("p", VARS), u, f, count=50, tol=0.0)
        assert rep.max_abs == 0.0 and rep.passed

    def test_reports_failure(self):
        f, u = latitude()
        rep = manifold_residual(f.model, parse("p - 1.01", VARS), u, f, count=50,
                                tol=1e-4, gradient_mode="analytic")
        assert not rep.passed
        assert rep.max_abs == pytest.approx(0.01, abs=1e-9)
        assert rep.worst_point is not None

    def test_deterministic(self):
        f, u = latitude()
        F = parse("p - 1", VARS)
        a = manifold_residual(f.model, F, u, f, count=50, seed=9).to_dict()
        b = manifold_residual(f.model, F, u, f, count=50, seed=9).to_dict()
        assert a == b

    def test_fd_converges_quadratically(self):
        f = tn.build("cartan_munzner_l2")
        u = Composite(f, math.exp, math.exp, -0.9, 0.9)
        F = parse("p - 4*(1 - t^2)*exp(2*t)", VARS)
        errs = [manifold_residual(f.model, F, u, f, count=40, seed=2, tol=1.0, h=h).max_abs
                for h in (4e-3, 2e-3, 1e-3)]
        assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5

    def test_excludes_focal_neighbourhoods(self):
        f = tn.build("cartan_munzner_l1")
        u = Composite(f, lambda t: t, lambda t: 1.0, 1.0 - 1e-6, 1.0)
        with pytest.raises(NoValidSamples):
            manifold_residual(f.model, parse("p - 1", VARS), u, f, count=5)

    def test_lifted_solution(self):
        f = tn.build("cartan_munzner_l2")
        prob = r1.ReducedProblem1D(parse("p - 4", VARS), f.profile, (0.0, 0.0, 4.0))
        u = r1.lift_1d(r1.integrate(prob, t_span=(-0.9, 0.9)), f)
        rep = manifold_residual(f.model, parse("p - 4", VARS), u, f, count=100,
                                gradient_mode="analytic", tol=1e-9)
        assert rep.passed, rep.max_abs


class TestReport:
    def test_pass_iff_max_within_tol(self):
        f = tn.build("line_identity")
        pts = [np.array([0.0]), np.array([1.0])]
        assert ResidualReport.from_errors([0.1, 0.2], pts, f.model, 0.2, "analytic", 0).passed
        rep = ResidualReport.from_errors([0.1, 0.3], pts, f.model, 0.2, "analytic", 0)
        assert not rep.passed and rep.worst_point.coords[0] == 1.0
        assert rep.mean_abs == pytest.approx(0.2)

    def test_empty(self):
        with pytest.raises(NoValidSamples):
            ResidualReport.from_errors([], [], tn.build("line_identity").model, 1.0, "analytic", 0)

    def test_dict_keys(self):
        rep = ResidualReport.from_errors([0.0], [np.array([0.0])], tn.build("line_identity").model,
                                         1.0, "analytic", 3)
        assert set(rep.to_dict()) == {"sample_count", "max_abs", "mean_abs", "worst_point",
                                      "tolerance", "pass", "gradient_mode", "seed"}


class TestInvariance:
    def test_lifted_field(self):
        f, u = latitude()
        rep = invariance_check(u, f, [-0.5, 0.0, 0.5], per_level_count=20, seed=1)
        assert rep.passed and rep.max_spread <= 1e-12

    def test_non_invariant_field(self):
        f = tn.build("cartan_munzner_l1")

        class FirstCoordinate:
            def value(self, x):
                return float(x[0])

        rep = invariance_check(FirstCoordinate(), f, [0.0], per_level_count=200, seed=0)
        assert not rep.passed
        assert rep.max_spread == pytest.approx(2.0, abs=0.02)

    def test_desitter_product_levels(self):
        f = tn.build("desitter_arccos")
        u = Composite(f, lambda s: s - math.pi / 2, lambda s: 1.0, 0.2, 2.9)
        assert invariance_check(u, f, [1.0, 1.5, 2.0]).passed

    def test_singular_level(self):
        f, u = latitude()
        with pytest.raises(SingularLevel):
            invariance_check(u, f, [1.0])
