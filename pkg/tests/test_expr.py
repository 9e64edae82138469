from __future__ import annotations

import math

import numpy as np
import pytest

from helpers import ad_fd_mismatch, random_expression
from transpde.errors import (
    ArityError,
    DomainError,
    ExprSyntaxError,
    NondifferentiablePoint,
    UnknownIdentifier,
)
from transpde.expr import DualScalar, eval_with_partials, evaluate, parse, to_text

V1 = ["t", "r", "p"]
V2 = ["t", "s", "r", "tau"]


class TestParse:
    def test_desitter_equation(self):
        e = parse("tau - 4/cosh(t)^2", V2)
        assert e.used_variables == {"tau", "t"}

    def test_product(self):
        e = parse("p*(4*t + 1)", V1)
        assert e.eval({"t": 1, "r": 0, "p": 2}) == 10.0

    def test_unclosed_call_offset(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("cosh(", V1)
        assert info.value.offset == 5

    def test_unexpected_token_offset(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("t + * r", V1)
        assert info.value.offset == 4

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier) as info:
            parse("t + q", V1)
        assert info.value.name == "q" and info.value.offset == 4

    def test_arity(self):
        with pytest.raises(ArityError):
            parse("min(t)", V1)
        with pytest.raises(ArityError):
            parse("sin(t, r)", V1)

    def test_empty(self):
        with pytest.raises(ExprSyntaxError):
            parse("   ", V1)

    def test_variable_colliding_with_function(self):
        with pytest.raises(ValueError):
            parse("sin", ["sin"])

    @pytest.mark.parametrize("text, value", [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("2^-1", 0.5),
        ("8/4/2", 1.0),
        ("5-3-1", 1.0),
        ("2*3+4*5", 26.0),
        ("-(1+2)*3", -9.0),
        ("pi - pi", 0.0),
    ])
    def test_precedence_and_associativity(self, text, value):
        assert parse(text, []).eval({}) == value

    @pytest.mark.parametrize("text", [
        "tau - 4/cosh(t)^2",
        "-p^2 + 4*q^2/cosh(t)^2",
        "(t - r) - (p - 1)",
        "t/(r*p)",
        "2^3^2",
        "(2^3)^2",
        "-(t^2)",
        "(-t)^2",
        "min(t, max(r, p)) - abs(-t)",
        "1e-3*t + 2.5e10",
    ])
    def test_round_trip(self, text):
        vars_ = ["t", "r", "p", "q", "tau"]
        e = parse(text, vars_)
        assert parse(to_text(e.root), vars_) == e

    def test_round_trip_fuzz(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            e = parse(random_expression(rng, V1), V1)
            assert parse(str(e), V1) == e


class TestEval:
    def test_desitter_at_origin(self):
        assert evaluate(parse("tau - 4/cosh(t)^2", V2), {"t": 0, "s": 0, "r": 0, "tau": 4}) == 0.0

    def test_cartan_munzner_profile(self):
        e = parse("l^2*(1-t^2)", ["l", "t"])
        assert e.eval({"l": 2, "t": 0.5}) == pytest.approx(3.0, abs=1e-15)

    @pytest.mark.parametrize("text, func", [
        ("arccos(1.5)", "arccos"),
        ("sqrt(-1)", "sqrt"),
        ("log(0)", "log"),
        ("arccosh(0.5)", "arccosh"),
        ("1/(1-1)", "/"),
        ("(-2)^0.5", "^"),
    ])
    def test_domain_errors(self, text, func):
        with pytest.raises(DomainError) as info:
            parse(text, []).eval({})
        assert info.value.func == func

    def test_integer_power_of_negative_base(self):
        assert parse("(-2)^3", []).eval({}) == -8.0

    def test_missing_binding(self):
        from transpde.errors import ExprError
        with pytest.raises(ExprError):
            parse("t + r", V1).eval({"t": 1.0})

    def test_deterministic(self):
        e = parse("sin(t)*exp(r) - p", V1)
        b = {"t": 0.3, "r": -0.2, "p": 1.1}
        assert e.eval(b) == e.eval(b)


class TestPartials:
    def test_eikonal_form(self):
        e = parse("tau - 3.5", V2)
        for t in (-1.0, 0.0, 2.0):
            d = e.eval_with_partials({"t": t, "s": 0.1, "r": 0.2, "tau": 7.0})
            assert d.partials == (0.0, 0.0, 0.0, 1.0)

    def test_desitter_hamiltonian_partials(self):
        e = parse("-p^2 + 4*q^2/cosh(t)^2", ["t", "p", "q"])
        d = eval_with_partials(e, {"t": 0.0, "p": 1.0, "q": 1.0})
        assert d.value == 3.0
        assert d.partials == pytest.approx((0.0, -2.0, 8.0), abs=1e-15)
        assert ad_fd_mismatch(e, {"t": 0.3, "p": 1.0, "q": 1.0}) < 1e-8

    def test_product_rule(self):
        d = parse("t*r", ["t", "r"]).eval_with_partials({"t": 2.0, "r": 3.0})
        assert d.partials == (3.0, 2.0)

    def test_abs_kink(self):
        e = parse("abs(t)", ["t"])
        with pytest.raises(NondifferentiablePoint):
            e.eval_with_partials({"t": 0.0})
        assert e.eval({"t": 0.0}) == 0.0

    def test_min_max_tie(self):
        e = parse("max(t, r)", ["t", "r"])
        with pytest.raises(NondifferentiablePoint):
            e.eval_with_partials({"t": 1.0, "r": 1.0})
        assert e.eval_with_partials({"t": 2.0, "r": 1.0}).partials == (1.0, 0.0)

    def test_constant_tie_is_fine(self):
        e = parse("t + max(1, 1)", ["t"])
        assert e.eval_with_partials({"t": 0.0}).partials == (1.0,)

    def test_arccos_endpoint(self):
        with pytest.raises(NondifferentiablePoint):
            parse("arccos(t)", ["t"]).eval_with_partials({"t": 1.0})

    def test_variable_exponent(self):
        e = parse("t^r", ["t", "r"])
        d = e.eval_with_partials({"t": 2.0, "r": 3.0})
        assert d.value == 8.0
        assert d.partials == pytest.approx((12.0, 8.0 * math.log(2.0)))

    def test_dual_composition(self):
        inner = DualScalar(0.5, (1.0, 0.0))
        out = parse("t^2", ["t"]).eval_dual({"t": inner})
        assert out.value == 0.25 and out.partials == (1.0, 0.0)

    def test_fuzz_against_finite_differences(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            e = parse(random_expression(rng, V1), V1)
            b = {v: float(rng.uniform(-1.5, 1.5)) for v in V1}
            assert ad_fd_mismatch(e, b) <= 1e-5, str(e)
