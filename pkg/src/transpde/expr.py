"""Scalar expression language with exact forward-mode partial derivatives.

Grammar (lowest to highest binding)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)`` and ``2^-1`` is ``2^(-1)``.  Names are either declared
variables, the constants ``pi`` and ``e``, or one of the functions in
:data:`FUNCTIONS`.

Evaluation never produces NaN: every domain violation raises
:class:`~transpde.errors.DomainError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

from .errors import (
    ArityError,
    DomainError,
    ExprError,
    ExprSyntaxError,
    NondifferentiablePoint,
    UnknownIdentifier,
)

__all__ = [
    "Expr",
    "DualScalar",
    "parse",
    "evaluate",
    "eval_with_partials",
    "FUNCTIONS",
    "CONSTANTS",
]

CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# dual numbers
# ---------------------------------------------------------------------------

class DualScalar:
    """A value together with its partial derivatives w.r.t. a fixed variable list."""

    __slots__ = ("value", "partials")

    def __init__(self, value: float, partials: Sequence[float]):
        self.value = float(value)
        self.partials = tuple(partials)

    @classmethod
    def variable(cls, value: float, index: int, count: int) -> DualScalar:
        d = [0.0] * count
        d[index] = 1.0
        return cls(value, d)

    @classmethod
    def constant(cls, value: float, count: int) -> DualScalar:
        return cls(value, (0.0,) * count)

    def scaled(self, value: float, factor: float) -> DualScalar:
        """Chain rule for a unary map with derivative ``factor`` at this point."""
        return DualScalar(value, [factor * d for d in self.partials])

    def is_constant(self) -> bool:
        return not any(self.partials)

    def __repr__(self) -> str:
        return f"DualScalar({self.value!r}, {list(self.partials)!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, DualScalar):
            return self.value == other.value and self.partials == other.partials
        return NotImplemented

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(
                self.value + other.value,
                [a + b for a, b in zip(self.partials, other.partials)],
            )
        return DualScalar(self.value + other, self.partials)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(
                self.value - other.value,
                [a - b for a, b in zip(self.partials, other.partials)],
            )
        return DualScalar(self.value - other, self.partials)

    def __rsub__(self, other):
        return DualScalar(other - self.value, [-a for a in self.partials])

    def __neg__(self):
        return DualScalar(-self.value, [-a for a in self.partials])

    def __mul__(self, other):
        if isinstance(other, DualScalar):
            u, v = self.value, other.value
            return DualScalar(
                u * v, [u * b + v * a for a, b in zip(self.partials, other.partials)]
            )
        return DualScalar(self.value * other, [a * other for a in self.partials])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualScalar):
            v = other.value
            if v == 0.0:
                raise DomainError("/", 0.0)
            u = self.value
            q = u / v
            return DualScalar(
                q, [(a - q * b) / v for a, b in zip(self.partials, other.partials)]
            )
        if other == 0.0:
            raise DomainError("/", 0.0)
        return DualScalar(self.value / other, [a / other for a in self.partials])

    def __rtruediv__(self, other):
        v = self.value
        if v == 0.0:
            raise DomainError("/", 0.0)
        q = other / v
        return DualScalar(q, [-q * b / v for b in self.partials])

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


Number = Union[float, DualScalar]


def _value(x: Number) -> float:
    return x.value if isinstance(x, DualScalar) else x


def _varies(x: Number) -> bool:
    return isinstance(x, DualScalar) and not x.is_constant()


def _guard(name: str, fn: Callable[[float], float], x: float) -> float:
    try:
        y = fn(x)
    except (OverflowError, ValueError, ZeroDivisionError):
        raise DomainError(name, x) from None
    if math.isnan(y) or math.isinf(y):
        raise DomainError(name, x)
    return y


def power(base: Number, expo: Number) -> Number:
    b, e = _value(base), _value(expo)
    integral = float(e).is_integer() and abs(e) < 2.0**53
    if not integral and b <= 0.0:
        raise DomainError("^", (b, e))
    try:
        v = b ** int(e) if integral else math.pow(b, e)
    except (OverflowError, ZeroDivisionError):
        raise DomainError("^", (b, e)) from None
    if isinstance(v, complex) or math.isinf(v) or math.isnan(v):
        raise DomainError("^", (b, e))
    if not (_varies(base) or _varies(expo)):
        return v
    n = max(
        len(x.partials) for x in (base, expo) if isinstance(x, DualScalar)
    )
    out = [0.0] * n
    if _varies(base):
        if integral:
            k = int(e)
            db = 0.0 if k == 0 else k * b ** (k - 1)
        else:
            db = e * math.pow(b, e - 1.0)
        for i, a in enumerate(base.partials):
            out[i] += db * a
    if _varies(expo):
        if b <= 0.0:
            raise NondifferentiablePoint("^", (b, e))
        de = v * math.log(b)
        for i, a in enumerate(expo.partials):
            out[i] += de * a
    return DualScalar(v, out)


# ---------------------------------------------------------------------------
# primitive functions
# ---------------------------------------------------------------------------

def _sqrt_d(x: float) -> float:
    if x == 0.0:
        raise NondifferentiablePoint("sqrt", x)
    return 0.5 / math.sqrt(x)


def _log(x: float) -> float:
    if x <= 0.0:
        raise DomainError("log", x)
    return math.log(x)


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError("sqrt", x)
    return math.sqrt(x)


def _arccos(x: float) -> float:
    if not -1.0 <= x <= 1.0:
        raise DomainError("arccos", x)
    return math.acos(x)


def _arccos_d(x: float) -> float:
    if abs(x) == 1.0:
        raise NondifferentiablePoint("arccos", x)
    return -1.0 / math.sqrt(1.0 - x * x)


def _arccosh(x: float) -> float:
    if x < 1.0:
        raise DomainError("arccosh", x)
    return math.acosh(x)


def _arccosh_d(x: float) -> float:
    if x == 1.0:
        raise NondifferentiablePoint("arccosh", x)
    return 1.0 / math.sqrt(x * x - 1.0)


def _tan(x: float) -> float:
    if math.cos(x) == 0.0:
        raise DomainError("tan", x)
    return math.tan(x)


def _abs_d(x: float) -> float:
    if x == 0.0:
        raise NondifferentiablePoint("abs", x)
    return 1.0 if x > 0 else -1.0


# name -> (value, derivative)
UNARY: dict[str, tuple[Callable[[float], float], Callable[[float], float]]] = {
    "sin": (math.sin, math.cos),
    "cos": (math.cos, lambda x: -math.sin(x)),
    "tan": (_tan, lambda x: 1.0 / math.cos(x) ** 2),
    "sinh": (math.sinh, math.cosh),
    "cosh": (math.cosh, math.sinh),
    "tanh": (math.tanh, lambda x: 1.0 - math.tanh(x) ** 2),
    "exp": (math.exp, math.exp),
    "log": (_log, lambda x: 1.0 / x),
    "sqrt": (_sqrt, _sqrt_d),
    "abs": (abs, _abs_d),
    "arccos": (_arccos, _arccos_d),
    "arccosh": (_arccosh, _arccosh_d),
}
BINARY = {"min": min, "max": max}
FUNCTIONS = {**{k: 1 for k in UNARY}, **{k: 2 for k in BINARY}}


def apply_unary(name: str, x: Number) -> Number:
    fn, dfn = UNARY[name]
    xv = _value(x)
    y = _guard(name, fn, xv)
    if not _varies(x):
        return y
    try:
        dy = dfn(xv)
    except (OverflowError, ValueError, ZeroDivisionError):
        raise DomainError(name, xv) from None
    return x.scaled(y, dy)


def apply_binary(name: str, x: Number, y: Number) -> Number:
    xv, yv = _value(x), _value(y)
    if not (_varies(x) or _varies(y)):
        return BINARY[name](xv, yv)
    if xv == yv:
        raise NondifferentiablePoint(name, (xv, yv))
    pick_x = (xv < yv) if name == "min" else (xv > yv)
    chosen = x if pick_x else y
    if isinstance(chosen, DualScalar):
        return chosen
    n = len((y if pick_x else x).partials)
    return DualScalar.constant(chosen, n)


# ---------------------------------------------------------------------------
# syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Const, Neg, Bin, Call]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def to_text(node: Node) -> str:
    """Render with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _prec(node.operand) <= _NEG_PREC:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _NEG_PREC:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.variables = set(variables)
        # char index -> byte offset
        self._byte = [0]
        for ch in text:
            self._byte.append(self._byte[-1] + len(ch.encode("utf-8")))
        self.tokens = self._tokenize()
        self.i = 0

    def _tokenize(self):
        out = []
        pos, n = 0, len(self.text)
        while pos < n:
            m = _TOKEN.match(self.text, pos)
            if m is None or m.end() == pos:
                start = pos
                while start < n and self.text[start].isspace():
                    start += 1
                if start >= n:
                    break
                raise ExprSyntaxError(
                    f"unexpected character {self.text[start]!r}", self._byte[start]
                )
            kind = m.lastgroup
            if kind is None:  # trailing whitespace
                break
            out.append((kind, m.group(kind), self._byte[m.start(kind)]))
            pos = m.end()
        out.append(("end", "", self._byte[n]))
        return out

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            self._unexpected(kind, val, off, f"expected {value!r}")

    @staticmethod
    def _unexpected(kind, val, off, hint=""):
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", off)
        extra = f" ({hint})" if hint else ""
        raise ExprSyntaxError(f"unexpected token {val!r}{extra}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            self._unexpected(kind, val, off, "expected end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            is_call = self.peek()[0] == "op" and self.peek()[1] == "("
            if is_call:
                if val not in FUNCTIONS:
                    if val in self.variables or val in CONSTANTS:
                        raise ExprSyntaxError(f"{val!r} is not a function", off)
                    raise UnknownIdentifier(val, off)
                self.take()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ArityError(val, FUNCTIONS[val], len(args), off)
                return Call(val, tuple(args))
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} needs an argument list", off)
            raise UnknownIdentifier(val, off)
        self._unexpected(kind, val, off)


# ---------------------------------------------------------------------------
# compilation to closures
# ---------------------------------------------------------------------------

def _div(a, b):
    if isinstance(b, DualScalar):
        return a / b
    if b == 0.0:
        raise DomainError("/", 0.0)
    return a / b


_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": power,
}


def _compile(node: Node) -> Callable[[Mapping[str, Number]], Number]:
    if isinstance(node, Num):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda env: v
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda env: -f(env)
    if isinstance(node, Bin):
        op = _BINOPS[node.op]
        fl, fr = _compile(node.left), _compile(node.right)
        return lambda env: op(fl(env), fr(env))
    if isinstance(node, Call):
        name = node.name
        fs = [_compile(a) for a in node.args]
        if len(fs) == 1:
            f0 = fs[0]
            return lambda env: apply_unary(name, f0(env))
        f0, f1 = fs
        return lambda env: apply_binary(name, f0(env), f1(env))
    raise TypeError(f"not an expression node: {node!r}")


def _collect_vars(node: Node, out: set):
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_vars(node.operand, out)
    elif isinstance(node, Bin):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_vars(a, out)


@dataclass(frozen=True, eq=False)
class Expr:
    """Parsed expression over a declared variable list."""

    root: Node
    variables: tuple
    text: str = ""

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return self.root == other.root and self.variables == other.variables

    def __hash__(self):
        return hash((self.root, self.variables))

    def __str__(self) -> str:
        return to_text(self.root)

    def __repr__(self) -> str:
        return f"Expr({str(self)!r}, variables={list(self.variables)!r})"

    @cached_property
    def _fn(self):
        return _compile(self.root)

    @cached_property
    def used_variables(self) -> frozenset:
        out: set = set()
        _collect_vars(self.root, out)
        return frozenset(out)

    def _env(self, bindings: Mapping[str, Number]) -> dict:
        missing = [v for v in self.variables if v not in bindings]
        if missing:
            raise ExprError(f"unbound variable(s): {', '.join(missing)}")
        return {v: bindings[v] for v in self.variables}

    def eval(self, bindings: Mapping[str, float]) -> float:
        env = {k: float(v) for k, v in self._env(bindings).items()}
        return float(self._fn(env))

    def eval_dual(self, bindings: Mapping[str, Number]) -> Number:
        """Evaluate with arbitrary dual-number bindings (for composition)."""
        return self._fn(self._env(bindings))

    def eval_with_partials(self, bindings: Mapping[str, float]) -> DualScalar:
        env = self._env(bindings)
        n = len(self.variables)
        seeded = {
            v: DualScalar.variable(float(env[v]), i, n)
            for i, v in enumerate(self.variables)
        }
        out = self._fn(seeded)
        if not isinstance(out, DualScalar):
            out = DualScalar.constant(out, n)
        return out


def parse(text: str, variables: Sequence[str]) -> Expr:
    """Parse ``text`` over the declared ``variables``."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    for v in variables:
        if v in FUNCTIONS:
            raise ValueError(f"variable name {v!r} collides with a function")
    root = _Parser(text, variables).parse()
    return Expr(root, tuple(variables), text)


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    return e.eval(bindings)


def eval_with_partials(e: Expr, bindings: Mapping[str, float]) -> DualScalar:
    return e.eval_with_partials(bindings)
