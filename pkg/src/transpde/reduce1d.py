"""One-dimensional reduction F^(t, w, a(t) |w'|^2) = 0.

A solution w of the reduced ODE lifts to the f-invariant solution u = w o f
of F(x, u, <grad u, grad u>) = 0.  Near a seed (t0, r0, p0) satisfying the
solvability conditions, the implicit equation F^(t, r, p) = 0 is solved for
p = H(t, r) by Newton continuation, and w' = sign * sqrt(H(t, w) / a(t)) is
integrated in both directions from t0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import ode
from .errors import (
    BranchLoss,
    DomainMismatch,
    ExprError,
    HypothesisError,
    OutsideDomain,
    QuadratureFailure,
    SignViolation,
    StepFailure,
    TranspdeError,
)
from .expr import Expr
from .profiles import Interval, ProfileFunction
from .quadrature import adaptive_simpson

SEED_TOL = 1e-10
PARTIAL_TOL = 1e-10
SIGN_TOL = 1e-14
PROFILE_ZERO = 1e-10
SCAN_POINTS = 4096
BRACKET = 1e-10
UNBOUNDED_REACH = 50.0

DOMAIN_EDGE = "DomainEdge"
SINGULAR_PROFILE = "SingularProfile"
BRANCH_LOSS = "ImplicitBranchLoss"
STEP_FAILURE = "StepFailure"


@dataclass(frozen=True, eq=False)
class ReducedProblem1D:
    fhat: Expr
    profile: ProfileFunction
    seed: tuple
    sign: int = 1
    branch_jump_cap: Optional[float] = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign branch must be +1 or -1, got {self.sign}")
        extra = set(self.fhat.variables) - {"t", "r", "p"}
        if extra:
            raise ValueError(f"reduced equation may only use t, r, p; got {sorted(extra)}")

    @property
    def t0(self) -> float:
        return float(self.seed[0])

    def residual(self, t: float, r: float, p: float) -> float:
        return self.fhat.eval({"t": t, "r": r, "p": p})


# -- hypotheses --------------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    value: Optional[float]
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "value": self.value,
                "detail": self.detail}


@dataclass(frozen=True)
class HypothesisReport:
    conditions: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failed(self) -> list:
        return [c.name for c in self.conditions if not c.passed]

    def to_dict(self) -> dict:
        return {"pass": self.passed, "conditions": [c.to_dict() for c in self.conditions]}


COND_DOMAIN = "t0 interior to the profile domain"
COND_ZERO = "F(t0, r0, p0) = 0"
COND_PARTIAL = "dF/dp(t0, r0, p0) != 0"
COND_SIGN = "a(t0) p0 > 0"


def check_hypotheses(problem: ReducedProblem1D) -> HypothesisReport:
    t0, r0, p0 = (float(v) for v in problem.seed)
    conds = [Condition(COND_DOMAIN, problem.profile.domain.is_interior(t0), t0,
                       f"domain {problem.profile.domain}")]
    try:
        d = problem.fhat.eval_with_partials({"t": t0, "r": r0, "p": p0})
        fp = d.partials[problem.fhat.variables.index("p")] if "p" in problem.fhat.variables else 0.0
        conds.append(Condition(COND_ZERO, abs(d.value) <= SEED_TOL, d.value, "|F| <= 1e-10"))
        conds.append(Condition(COND_PARTIAL, abs(fp) >= PARTIAL_TOL, fp, "|dF/dp| >= 1e-10"))
    except ExprError as exc:
        conds.append(Condition(COND_ZERO, False, None, str(exc)))
        conds.append(Condition(COND_PARTIAL, False, None, str(exc)))
    try:
        ap = problem.profile(t0) * p0
        conds.append(Condition(COND_SIGN, ap >= SIGN_TOL, ap, "a(t0) p0 >= 1e-14"))
    except (ExprError, ValueError) as exc:
        conds.append(Condition(COND_SIGN, False, None, str(exc)))
    return HypothesisReport(tuple(conds))


def require_hypotheses(problem: ReducedProblem1D) -> HypothesisReport:
    rep = check_hypotheses(problem)
    if not rep.passed:
        raise HypothesisError("solvability conditions violated: " + "; ".join(rep.failed), rep)
    return rep


# -- implicit branch ---------------------------------------------------------------

class ImplicitBranch:
    """p = H(t, r) with F^(t, r, H) = 0, tracked from the seed by Newton.

    Each query warm-starts from the previous root; a Newton iterate moving
    more than ``cap`` away from that start is treated as a jump to another
    branch and rejected.
    """

    def __init__(self, problem: ReducedProblem1D, cap: Optional[float] = None,
                 max_iter: int = 50):
        self.fhat = problem.fhat
        _, _, p0 = problem.seed
        self.p = float(p0)
        self.cap = float(cap if cap is not None else
                         problem.branch_jump_cap if problem.branch_jump_cap is not None
                         else 0.5 * abs(p0) + 0.5)
        self.max_iter = max_iter
        self._ip = self.fhat.variables.index("p") if "p" in self.fhat.variables else None

    def reset(self, p: float) -> None:
        self.p = float(p)

    def __call__(self, t: float, r: float, guess: Optional[float] = None) -> float:
        if self._ip is None:
            raise BranchLoss("reduced equation does not depend on p")
        start = self.p if guess is None else float(guess)
        p = start
        for _ in range(self.max_iter):
            d = self.fhat.eval_with_partials({"t": t, "r": r, "p": p})
            fp = d.partials[self._ip]
            if abs(fp) < 1e-12:
                raise BranchLoss(f"dF/dp = {fp!r} at t = {t!r}, r = {r!r}")
            step = d.value / fp
            p -= step
            if abs(p - start) > self.cap:
                raise BranchLoss(
                    f"Newton jumped from p = {start!r} to {p!r} at t = {t!r} (cap {self.cap})"
                )
            if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(p)):
                break
        res = self.fhat.eval({"t": t, "r": r, "p": p})
        if abs(res) > 1e-12 * max(1.0, abs(p * fp)):
            raise BranchLoss(f"Newton did not converge at t = {t!r} (residual {res:.3g})")
        self.p = p
        return p


def implicit_branch(problem: ReducedProblem1D) -> ImplicitBranch:
    require_hypotheses(problem)
    return ImplicitBranch(problem)


# -- solutions ---------------------------------------------------------------------

@dataclass(frozen=True)
class Termination:
    kind: str
    t: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class Solution1D:
    """Reduced solution on a strictly increasing grid.

    ``slope(t, w, guess)`` recomputes w' from the reduced equation; it is what
    ``derivative`` returns, so derivatives stay consistent with the ODE
    rather than with the interpolant.
    """

    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    terminations: dict
    slope: Optional[Callable] = None
    variable: str = "t"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("solution grid must be strictly increasing with >= 2 points")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "derivatives", np.asarray(self.derivatives, dtype=float))
        object.__setattr__(self, "_spline",
                           CubicHermiteSpline(g, self.values, self.derivatives, extrapolate=False))

    @property
    def domain(self) -> Interval:
        return Interval(float(self.grid[0]), float(self.grid[-1]))

    def _check(self, t: float) -> None:
        if not self.grid[0] <= t <= self.grid[-1]:
            raise OutsideDomain(
                f"{self.variable} = {t!r} outside solution domain "
                f"[{self.grid[0]!r}, {self.grid[-1]!r}]"
            )

    def __call__(self, t: float) -> float:
        t = float(t)
        self._check(t)
        i = int(np.searchsorted(self.grid, t))
        if i < self.grid.size and self.grid[i] == t:
            return float(self.values[i])
        return float(self._spline(t))

    def derivative(self, t: float) -> float:
        t = float(t)
        self._check(t)
        i = int(np.searchsorted(self.grid, t))
        if i < self.grid.size and self.grid[i] == t:
            return float(self.derivatives[i])
        guess = float(self._spline(t, 1))
        if self.slope is None:
            return guess
        return float(self.slope(t, self(t), guess))

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "domain": [float(self.grid[0]), float(self.grid[-1])],
            "terminations": {k: v.to_dict() for k, v in self.terminations.items()},
            "meta": self.meta,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "derivatives": self.derivatives.tolist(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.variable, "w", "w_prime"])
        for row in zip(self.grid, self.values, self.derivatives):
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_function(cls, w: Callable, dw: Callable, grid, variable: str = "t",
                      meta: Optional[dict] = None) -> Solution1D:
        g = np.asarray(grid, dtype=float)
        edge = {"lower": Termination(DOMAIN_EDGE, float(g[0])),
                "upper": Termination(DOMAIN_EDGE, float(g[-1]))}
        return cls(g, [w(t) for t in g], [dw(t) for t in g], edge,
                   slope=lambda t, r, guess: dw(t), variable=variable, meta=meta or {})


# -- profile scanning --------------------------------------------------------------

def _clip_span(profile: ProfileFunction, t0: float, t_span) -> tuple:
    dom = profile.domain
    lo, hi = (dom.lo, dom.hi) if t_span is None else (float(t_span[0]), float(t_span[1]))
    if lo > hi:
        lo, hi = hi, lo
    lo, hi = max(lo, dom.lo), min(hi, dom.hi)
    reach = UNBOUNDED_REACH * max(1.0, abs(t0))
    if not math.isfinite(lo):
        lo = t0 - reach
    if not math.isfinite(hi):
        hi = t0 + reach
    if not lo <= t0 <= hi:
        raise DomainMismatch(f"t0 = {t0!r} outside the span [{lo!r}, {hi!r}]")
    return lo, hi


def _profile_bad(profile: ProfileFunction, sign0: float) -> Callable[[float], bool]:
    def bad(t: float) -> bool:
        try:
            a = profile(t)
        except TranspdeError:
            return True
        return abs(a) <= PROFILE_ZERO or a * sign0 < 0 or not math.isfinite(a)
    return bad


def locate_singularity(bad: Callable[[float], bool], good: float, worse: float,
                       profile: Optional[ProfileFunction] = None) -> float:
    """Bisect the first bad point between a good and a bad abscissa to BRACKET."""
    while abs(worse - good) > BRACKET:
        mid = 0.5 * (good + worse)
        if bad(mid):
            worse = mid
        else:
            good = mid
    t_star = 0.5 * (good + worse)
    if profile is not None:
        # one Newton polish on a(t) = 0 when the zero is simple
        try:
            a, da = profile(t_star), profile.derivative(t_star)
            if da != 0 and math.isfinite(a / da):
                cand = t_star - a / da
                lo, hi = min(good, worse) - BRACKET, max(good, worse) + BRACKET
                if lo <= cand <= hi and profile.domain.in_closure(cand):
                    t_star = cand
        except TranspdeError:
            pass
    return t_star


def scan_direction(profile: ProfileFunction, t0: float, end: float,
                   extra_bad: Optional[Callable[[float], bool]] = None):
    """First singular point of the profile between t0 and end, or None."""
    sign0 = math.copysign(1.0, profile(t0))
    base_bad = _profile_bad(profile, sign0)

    def bad(t):
        return base_bad(t) or (extra_bad is not None and extra_bad(t))

    pts = np.linspace(t0, end, SCAN_POINTS + 1)
    prev = t0
    for t in pts[1:]:
        if bad(float(t)):
            return locate_singularity(bad, prev, float(t), profile), bad
        prev = float(t)
    return None, bad


def _gap(t_star: float) -> float:
    return 1e-8 * max(1.0, abs(t_star))


# -- integration -------------------------------------------------------------------

def _slope_function(problem: ReducedProblem1D, branch: ImplicitBranch):
    a = problem.profile
    sign = problem.sign

    def slope(t: float, w: float, guess: Optional[float] = None) -> float:
        at = a(t)
        hint = None if guess is None else at * guess * guess
        h = branch(t, w, hint)
        ratio = h / at
        if not ratio > 0:
            raise SignViolation(f"H/a = {ratio!r} <= 0 at t = {t!r}")
        return sign * math.sqrt(ratio)

    return slope


def _hermite_mid(t0, t1, w0, w1, d0, d1):
    h = t1 - t0
    return 0.5 * (w0 + w1) + h * (d0 - d1) / 8.0


def refine_grid(ts, ws, ds, midpoint: Callable, tol: float, max_rounds: int = 30):
    """Insert interval midpoints until cubic Hermite reproduces them to ``tol``.

    ``midpoint(i, tm)`` returns (w, w') at tm from an accurate local solve
    starting at node i.
    """
    ts, ws, ds = list(ts), list(ws), list(ds)
    todo = list(range(len(ts) - 1))
    for _ in range(max_rounds):
        if not todo:
            break
        new_t, new_w, new_d, flagged = [], [], [], set()
        for i in todo:
            tm = 0.5 * (ts[i] + ts[i + 1])
            if not ts[i] < tm < ts[i + 1]:
                continue
            wm, dm = midpoint(i, tm, ts, ws, ds)
            herm = _hermite_mid(ts[i], ts[i + 1], ws[i], ws[i + 1], ds[i], ds[i + 1])
            if abs(herm - wm) > tol:
                new_t.append(tm)
                new_w.append(wm)
                new_d.append(dm)
                flagged.add(i)
        if not new_t:
            break
        order = np.argsort(np.concatenate([ts, new_t]), kind="stable")
        ts = list(np.concatenate([ts, new_t])[order])
        ws = list(np.concatenate([ws, new_w])[order])
        ds = list(np.concatenate([ds, new_d])[order])
        pos = {t: k for k, t in enumerate(ts)}
        todo = sorted({pos[t] for t in new_t} | {pos[t] - 1 for t in new_t})
    return np.asarray(ts), np.asarray(ws), np.asarray(ds)


def _integrate_direction(problem, slope, branch, t0, r0, end, tol, max_step):
    target, planned, bad = end, None, None
    t_star, bad = scan_direction(problem.profile, t0, end)
    if t_star is not None:
        d = 1.0 if end > t0 else -1.0
        target = t_star - d * _gap(t_star)
        planned = Termination(SINGULAR_PROFILE, t_star,
                              f"a vanishes or changes sign; a(t*) = {problem.profile(t_star)!r}")
        if (target - t0) * d <= 0:
            return [t0], [r0], None, planned
    else:
        planned = Termination(DOMAIN_EDGE, float(end))

    branch.reset(problem.seed[2])
    res = ode.integrate(lambda t, y: np.array([slope(t, y[0])]), t0, [r0], target, tol,
                        max_step=max_step)
    ts = [float(v) for v in res.t]
    ws = [float(v[0]) for v in res.y]
    fs = [float(v[0]) for v in res.f]
    if res.status == "success":
        return ts, ws, fs, planned
    err = res.error
    t_last = ts[-1]
    if isinstance(err, SignViolation):
        return ts, ws, fs, Termination(SINGULAR_PROFILE, t_last, str(err))
    if isinstance(err, BranchLoss):
        if not res.progressed:
            raise err
        return ts, ws, fs, Termination(BRANCH_LOSS, t_last, str(err))
    if not res.progressed:
        raise StepFailure(f"no progress from t0 = {t0!r}: {err or res.reason}")
    return ts, ws, fs, Termination(STEP_FAILURE, t_last, str(err or res.reason))


def integrate(problem: ReducedProblem1D, tol: float = 1e-10, t_span=None,
              max_step: Optional[float] = None) -> Solution1D:
    """Bidirectional Dormand-Prince integration of w' = sign sqrt(H(t, w) / a(t))."""
    report = require_hypotheses(problem)
    t0, r0, _ = (float(v) for v in problem.seed)
    lo, hi = _clip_span(problem.profile, t0, t_span)
    branch = ImplicitBranch(problem)
    slope = _slope_function(problem, branch)
    if max_step is None:
        max_step = max(hi - lo, 1e-12) / 64.0

    p0 = float(problem.seed[2])
    branch.reset(p0)
    d0 = slope(t0, r0)
    up_t, up_w, up_f, up_term = _integrate_direction(problem, slope, branch, t0, r0, hi,
                                                     tol, max_step)
    dn_t, dn_w, dn_f, dn_term = _integrate_direction(problem, slope, branch, t0, r0, lo,
                                                     tol, max_step)
    ts = dn_t[:0:-1] + up_t
    ws = dn_w[:0:-1] + up_w
    ds = (dn_f or [d0])[:0:-1] + (up_f or [d0])
    if len(ts) < 2:
        raise StepFailure(f"integration made no progress from t0 = {t0!r}")

    def midpoint(i, tm, ts_, ws_, ds_):
        branch.reset(problem.profile(ts_[i]) * ds_[i] ** 2)
        y, f, _ = ode.dp_step(lambda t, y: np.array([slope(t, y[0])]), ts_[i],
                              np.array([ws_[i]]), np.array([ds_[i]]), tm - ts_[i])
        return float(y[0]), float(f[0])

    ts, ws, ds = refine_grid(ts, ws, ds, midpoint, tol)
    meta = {
        "method": "dormand-prince",
        "tol": tol,
        "seed": [t0, r0, p0],
        "sign": problem.sign,
        "hypotheses": report.to_dict(),
    }
    return Solution1D(ts, ws, ds, {"lower": dn_term, "upper": up_term},
                      slope=slope, meta=meta)


# -- eikonal quadrature ------------------------------------------------------------

def quadrature_eikonal(uhat: Expr, profile: ProfileFunction, t0: float, r0: float,
                       sign: int = 1, t_span=None, tol: float = 1e-10,
                       nodes: int = 64) -> Solution1D:
    """w(t) = r0 + sign * integral_{t0}^{t} sqrt(U(s) / a(s)) ds by adaptive Simpson."""
    if sign not in (1, -1):
        raise ValueError(f"sign branch must be +1 or -1, got {sign}")
    t0, r0 = float(t0), float(r0)
    lo, hi = _clip_span(profile, t0, t_span)

    def ratio(t: float) -> float:
        return uhat.eval({"t": t}) / profile(t)

    def integrand(t: float) -> float:
        q = ratio(t)
        # positivity is only required on the interior of the span
        if not (q > 0 or (q == 0 and t in (lo, hi))):
            raise SignViolation(f"U/a = {q!r} <= 0 at t = {t!r}")
        return math.sqrt(q)

    if not profile.domain.is_interior(t0):
        raise SignViolation(f"t0 = {t0!r} is not interior to the profile domain")
    integrand(t0)

    terms, pieces = {}, {}
    for key, end in (("upper", hi), ("lower", lo)):
        if end == t0:
            pieces[key] = [t0]
            terms[key] = Termination(DOMAIN_EDGE, t0)
            continue
        t_star, _ = scan_direction(profile, t0, end)
        if t_star is not None:
            d = 1.0 if end > t0 else -1.0
            target = t_star - d * _gap(t_star)
            terms[key] = Termination(SINGULAR_PROFILE, t_star, "a vanishes or changes sign")
        else:
            target = end
            terms[key] = Termination(DOMAIN_EDGE, float(end))
        # a sign change of U/a strictly inside the span is an error, not an end
        chk = np.linspace(t0, target, SCAN_POINTS + 1)
        for t in chk:
            try:
                integrand(float(t))
            except SignViolation as exc:
                raise SignViolation(f"{exc} inside the span") from exc
            except TranspdeError as exc:
                raise SignViolation(f"U/a undefined at t = {t!r}: {exc}") from exc
        u = np.linspace(0.0, 1.0, nodes + 1)
        if t_star is not None:
            # w behaves like sqrt(t* - t) near a simple zero of a; grading the
            # nodes quadratically towards t* evens out the increments of w
            u = 1.0 - (1.0 - u) ** 2
        pieces[key] = list(t0 + (target - t0) * u)

    grid = pieces["lower"][:0:-1] + pieces["upper"]
    grid = [float(t) for t in grid]
    k0 = len(pieces["lower"]) - 1
    ws = [0.0] * len(grid)
    ws[k0] = r0
    seg_tol = tol / (2 * nodes)
    try:
        for k in range(k0 + 1, len(grid)):
            ws[k] = ws[k - 1] + sign * adaptive_simpson(integrand, grid[k - 1], grid[k], seg_tol)
        for k in range(k0 - 1, -1, -1):
            ws[k] = ws[k + 1] - sign * adaptive_simpson(integrand, grid[k], grid[k + 1], seg_tol)
    except SignViolation:
        raise
    except TranspdeError as exc:
        raise QuadratureFailure(str(exc)) from exc
    ds = [sign * integrand(t) for t in grid]

    def midpoint(i, tm, ts_, ws_, ds_):
        w = ws_[i] + sign * adaptive_simpson(integrand, ts_[i], tm, seg_tol)
        return w, sign * integrand(tm)

    ts, ws, ds = refine_grid(grid, ws, ds, midpoint, tol)
    meta = {"method": "adaptive-simpson", "tol": tol, "seed": [t0, r0], "sign": sign}
    return Solution1D(ts, ws, ds, terms,
                      slope=lambda t, w, guess=None: sign * integrand(t), meta=meta)


# -- substitutions and lifting -----------------------------------------------------

def substitute_trig(sol: Solution1D, mode: str) -> Solution1D:
    """v(s) = w(cos s) on (0, pi), or v(s) = w(cosh s) on (0, inf)."""
    lo, hi = float(sol.grid[0]), float(sol.grid[-1])
    if mode == "cos":
        if lo < -1.0 or hi > 1.0:
            raise DomainMismatch(f"cos substitution needs a domain inside [-1, 1], got [{lo}, {hi}]")
        fwd, inv, dfwd = math.cos, math.acos, lambda s: -math.sin(s)
    elif mode == "cosh":
        if lo < 1.0:
            raise DomainMismatch(f"cosh substitution needs a domain inside [1, inf), got [{lo}, {hi}]")
        fwd, inv, dfwd = math.cosh, math.acosh, math.sinh
    else:
        raise ValueError(f"unknown substitution mode {mode!r}")
    s_nodes = np.array([inv(t) for t in sol.grid])
    order = np.argsort(s_nodes)
    s_nodes = s_nodes[order]
    keep = np.concatenate([[True], np.diff(s_nodes) > 0])
    s_nodes = s_nodes[keep]
    vals = sol.values[order][keep]
    ders = (sol.derivatives[order][keep]
            * np.array([dfwd(s) for s in s_nodes]))

    def slope(s, v, guess=None):
        t = fwd(s)
        inner = None if guess is None or dfwd(s) == 0 else guess / dfwd(s)
        return sol.slope(t, v, inner) * dfwd(s) if sol.slope else sol.derivative(t) * dfwd(s)

    terms = {
        "lower": sol.terminations["upper" if mode == "cos" else "lower"],
        "upper": sol.terminations["lower" if mode == "cos" else "upper"],
    }
    meta = dict(sol.meta, substitution=mode)
    return Solution1D(s_nodes, vals, ders, terms, slope=slope, variable="s", meta=meta)


@dataclass(frozen=True, eq=False)
class LiftedField1D:
    """u = w o f on the preimage of the solution domain."""

    solution: Solution1D
    f: object

    def value(self, x) -> float:
        return self.solution(self.f.value(x))

    __call__ = value

    def differential(self, x) -> np.ndarray:
        t = self.f.value(x)
        return self.solution.derivative(t) * np.asarray(self.f.differential(x), dtype=float)

    def sample_parameters(self, rng: np.random.Generator) -> float:
        lo, hi = float(self.solution.grid[0]), float(self.solution.grid[-1])
        pad = 1e-6 * (hi - lo)
        return float(rng.uniform(lo + pad, hi - pad))


def lift_1d(sol: Solution1D, f) -> LiftedField1D:
    image = f.image
    lo, hi = float(sol.grid[0]), float(sol.grid[-1])
    if not (image.in_closure(lo) and image.in_closure(hi)):
        raise DomainMismatch(f"solution domain [{lo}, {hi}] not inside Im f = {image}")
    return LiftedField1D(sol, f)


def reduced_residual_1d(problem: ReducedProblem1D, sol: Solution1D, t: float) -> float:
    """F^(t, w(t), a(t) w'(t)^2) at a point of the solution domain."""
    w = sol(t)
    d = sol.derivative(t)
    return problem.residual(t, w, problem.profile(t) * d * d)
