"""Shared test utilities: random expression generator and FD partials."""

from __future__ import annotations

import numpy as np

# templates keep every subexpression inside its function's domain
UNARY_TEMPLATES = [
    "sin({a})",
    "cos({a})",
    "tanh({a})",
    "exp(sin({a}))",
    "sqrt(1 + ({a})^2)",
    "log(2 + cos({a}))",
    "cosh(sin({a}))",
    "sinh(tanh({a}))",
    "arccos(tanh({a})/2)",
    "arccosh(2 + ({a})^2)",
    "tan(tanh({a}))",
    "abs(2 + sin({a}))",
    "({a})^2",
    "({a})^3",
    "-{a}",
    "(1.5 + sin({a}))^(0.5 + tanh({a})^2)",
]
BINARY_TEMPLATES = [
    "({a} + {b})",
    "({a} - {b})",
    "({a} * {b})",
    "({a} / (1 + ({b})^2))",
    "(2 + cos({a}))^{b}",
]


def random_expression(rng: np.random.Generator, variables, depth: int = 4) -> str:
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.7:
            return str(variables[rng.integers(len(variables))])
        return repr(round(float(rng.uniform(-2, 2)), 3))
    if rng.random() < 0.55:
        tpl = UNARY_TEMPLATES[rng.integers(len(UNARY_TEMPLATES))]
        return tpl.format(a=random_expression(rng, variables, depth - 1))
    tpl = BINARY_TEMPLATES[rng.integers(len(BINARY_TEMPLATES))]
    return tpl.format(a=random_expression(rng, variables, depth - 1),
                      b=random_expression(rng, variables, depth - 1))


def fd_partials(e, bindings: dict) -> list:
    out = []
    for v in e.variables:
        h = 1e-6 * max(1.0, abs(bindings[v]))
        up = dict(bindings, **{v: bindings[v] + h})
        dn = dict(bindings, **{v: bindings[v] - h})
        out.append((e.eval(up) - e.eval(dn)) / (2 * h))
    return out


def ad_fd_mismatch(e, bindings: dict) -> float:
    """Worst relative disagreement between dual-number and FD partials."""
    ad = e.eval_with_partials(bindings).partials
    fd = fd_partials(e, bindings)
    return max(abs(a - f) / max(1.0, abs(a)) for a, f in zip(ad, fd))
