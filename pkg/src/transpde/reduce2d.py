"""Two-dimensional reduction on warped products L x_alpha N.

For u = w(f_L, f_N) the equation F(x, u, <grad u, grad u>) = 0 becomes

    F^(t, s, w, -a_L(t) w_t^2 + a_N(s) / alpha(t)^2 * w_s^2) = 0

on I_L x I_N.  With H(t, s, r, p, q) = F^(t, s, r, tau(t, s, p, q)) the
Cauchy problem w(T(z), S(z)) = R(z) is solved by characteristic strips

    t' = H_p, s' = H_q, r' = p H_p + q H_q, p' = -(H_t + p H_r), q' = -(H_s + q H_r)

launched from a fan of points on the initial curve.
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
    CoverageFailure,
    DriftViolation,
    ExprError,
    HypothesisError,
    InversionFailure,
    NonpositiveWarping,
    OutsideCoverage,
    StepFailure,
    StripRootFailure,
    TranspdeError,
    TransversalityLoss,
)
from .expr import DualScalar, Expr
from .profiles import Interval, ProfileFunction
from .reduce1d import Condition, HypothesisReport, Termination

WARP_SCAN = 1000
UNBOUNDED_REACH = 50.0
SEED_TOL = 1e-10
COMPAT_TOL = 1e-9
TRANSVERSAL_TOL = 1e-10
ROOT_TOL = 1e-12
DRIFT_TOL = 1e-8

COND_BASE = "(S.1) base point interior to I_L x I_N"
COND_SEED = "H(t0, s0, r0, p0, q0) = 0"
COND_NONZERO = "(p0, q0) != (0, 0)"
COND_COMPAT = "(S.3) R'(0) = p0 T'(0) + q0 S'(0)"
COND_TRANSVERSAL = "(S.2) q0 T'(0) != p0 S'(0)"
COND_NONCHAR = "noncharacteristic T'(0) H_q - S'(0) H_p != 0"
COND_PROOF = "T'(0) H_p - S'(0) H_q != 0"
COND_FTAU = "dF/dtau != 0 at the seed"

# conditions whose failure is reported but does not block a solve
ADVISORY = {COND_PROOF}
TRANSVERSALITY = {COND_TRANSVERSAL, COND_NONCHAR}


def _finite_span(iv: Interval) -> tuple:
    lo = iv.lo if math.isfinite(iv.lo) else -UNBOUNDED_REACH
    hi = iv.hi if math.isfinite(iv.hi) else UNBOUNDED_REACH
    return lo, hi


@dataclass(frozen=True, eq=False)
class ReducedProblem2D:
    fhat: Expr
    profile_L: ProfileFunction
    profile_N: ProfileFunction
    warp: Expr
    t_domain: Optional[Interval] = None
    s_domain: Optional[Interval] = None

    def __post_init__(self):
        extra = set(self.fhat.variables) - {"t", "s", "r", "tau"}
        if extra:
            raise ValueError(f"reduced equation may only use t, s, r, tau; got {sorted(extra)}")
        if set(self.warp.variables) - {"t"}:
            raise ValueError("warp must be an expression in t only")
        if self.t_domain is None:
            object.__setattr__(self, "t_domain", self.profile_L.domain)
        if self.s_domain is None:
            object.__setattr__(self, "s_domain", self.profile_N.domain)
        lo, hi = _finite_span(self.t_domain)
        for t in np.linspace(lo, hi, WARP_SCAN):
            try:
                v = self.warp.eval({"t": float(t)})
            except ExprError as exc:
                raise NonpositiveWarping(f"warp undefined at t = {float(t)!r}: {exc}") from exc
            if not v > 0:
                raise NonpositiveWarping(f"warp = {v!r} at t = {float(t)!r}")

    def inside(self, t: float, s: float) -> bool:
        return self.t_domain.in_closure(t) and self.s_domain.in_closure(s)

    def tau(self, t: float, s: float, wt: float, ws: float) -> float:
        al = self.warp.eval({"t": t})
        return -self.profile_L(t) * wt * wt + self.profile_N(s) / (al * al) * ws * ws

    def residual(self, t, s, r, wt, ws) -> float:
        return self.fhat.eval({"t": t, "s": s, "r": r, "tau": self.tau(t, s, wt, ws)})


def reduced_residual_2d(problem: ReducedProblem2D, w: Callable, point, partials: Optional[Callable] = None,
                        h: float = 1e-6) -> float:
    """F^(t, s, w, tau) for a test function w(t, s); partials analytic or central FD."""
    t, s = (float(v) for v in point)
    if partials is not None:
        wt, ws = partials(t, s)
    else:
        wt = (w(t + h, s) - w(t - h, s)) / (2 * h)
        ws = (w(t, s + h) - w(t, s - h)) / (2 * h)
    return problem.residual(t, s, w(t, s), wt, ws)


# -- Hamiltonian -------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianValue:
    H: float
    H_t: float
    H_s: float
    H_r: float
    H_p: float
    H_q: float
    F_tau: float = float("nan")


class Hamiltonian:
    """H(t, s, r, p, q) = F^(t, s, r, -a_L p^2 + a_N / alpha^2 q^2) with exact partials."""

    def __init__(self, problem: ReducedProblem2D):
        self.problem = problem

    def _dual(self, t, s, r, p, q):
        pr = self.problem
        T = DualScalar.variable(t, 0, 5)
        S = DualScalar.variable(s, 1, 5)
        R = DualScalar.variable(r, 2, 5)
        P = DualScalar.variable(p, 3, 5)
        Q = DualScalar.variable(q, 4, 5)
        aL = DualScalar(pr.profile_L(t), (pr.profile_L.derivative(t), 0, 0, 0, 0))
        aN = DualScalar(pr.profile_N(s), (0, pr.profile_N.derivative(s), 0, 0, 0))
        al = pr.warp.eval_dual({"t": T})
        tau = -aL * P * P + aN / (al * al) * Q * Q
        return T, S, R, tau

    def __call__(self, t, s, r, p, q) -> HamiltonianValue:
        T, S, R, tau = self._dual(t, s, r, p, q)
        out = self.problem.fhat.eval_dual({"t": T, "s": S, "r": R, "tau": tau})
        if not isinstance(out, DualScalar):
            out = DualScalar.constant(out, 5)
        ftau = self.problem.fhat.eval_with_partials(
            {"t": t, "s": s, "r": r, "tau": tau.value})
        iv = self.problem.fhat.variables.index("tau") if "tau" in self.problem.fhat.variables else None
        f_tau = ftau.partials[iv] if iv is not None else 0.0
        return HamiltonianValue(out.value, *out.partials, F_tau=f_tau)

    def value(self, t, s, r, p, q) -> float:
        pr = self.problem
        al = pr.warp.eval({"t": t})
        tau = -pr.profile_L(t) * p * p + pr.profile_N(s) / (al * al) * q * q
        return pr.fhat.eval({"t": t, "s": s, "r": r, "tau": tau})

    def rhs(self, y) -> np.ndarray:
        t, s, r, p, q = y
        T, S, R, tau = self._dual(t, s, r, p, q)
        out = self.problem.fhat.eval_dual({"t": T, "s": S, "r": R, "tau": tau})
        if not isinstance(out, DualScalar):
            return np.zeros(5)
        ht, hs, hr, hp, hq = out.partials
        return np.array([hp, hq, p * hp + q * hq, -(ht + p * hr), -(hs + q * hr)])


def hamiltonian(problem: ReducedProblem2D) -> Hamiltonian:
    return Hamiltonian(problem)


# -- Cauchy data -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CauchyData:
    T: Expr
    S: Expr
    R: Expr
    zeta_range: tuple
    strip_seed: tuple

    def curve(self, zeta: float):
        """(T, S, R) and their zeta-derivatives."""
        vals, ders = [], []
        for e in (self.T, self.S, self.R):
            d = e.eval_with_partials({"zeta": zeta})
            vals.append(d.value)
            ders.append(d.partials[0] if d.partials else 0.0)
        return vals, ders


def check_hypotheses_2d(problem: ReducedProblem2D, data: CauchyData) -> HypothesisReport:
    ham = Hamiltonian(problem)
    p0, q0 = (float(v) for v in data.strip_seed)
    conds = []
    try:
        (t0, s0, r0), (dT, dS, dR) = data.curve(0.0)
    except ExprError as exc:
        return HypothesisReport((Condition(COND_BASE, False, None, str(exc)),))
    inside = problem.t_domain.is_interior(t0) and problem.s_domain.is_interior(s0)
    conds.append(Condition(COND_BASE, inside, None, f"(T(0), S(0)) = ({t0!r}, {s0!r})"))
    conds.append(Condition(COND_NONZERO, (p0, q0) != (0.0, 0.0), math.hypot(p0, q0)))
    compat = dR - p0 * dT - q0 * dS
    conds.append(Condition(COND_COMPAT, abs(compat) <= COMPAT_TOL, compat, "|residual| <= 1e-9"))
    sigma2 = q0 * dT - p0 * dS
    conds.append(Condition(COND_TRANSVERSAL, abs(sigma2) > TRANSVERSAL_TOL, sigma2,
                           "|q0 T' - p0 S'| > 1e-10"))
    try:
        hv = ham(t0, s0, r0, p0, q0)
        conds.append(Condition(COND_SEED, abs(hv.H) <= SEED_TOL, hv.H, "|H| <= 1e-10"))
        conds.append(Condition(COND_FTAU, abs(hv.F_tau) > TRANSVERSAL_TOL, hv.F_tau))
        nonchar = dT * hv.H_q - dS * hv.H_p
        conds.append(Condition(COND_NONCHAR, abs(nonchar) > TRANSVERSAL_TOL, nonchar,
                               "Jacobian of (zeta, sigma) -> (t, s) at the base point"))
        proof = dT * hv.H_p - dS * hv.H_q
        conds.append(Condition(COND_PROOF, abs(proof) > TRANSVERSAL_TOL, proof,
                               "advisory; vanishes for q0 = 0 data along s"))
    except ExprError as exc:
        conds.append(Condition(COND_SEED, False, None, str(exc)))
    return HypothesisReport(tuple(conds))


def require_hypotheses_2d(problem: ReducedProblem2D, data: CauchyData) -> HypothesisReport:
    rep = check_hypotheses_2d(problem, data)
    failed = [c.name for c in rep.conditions if not c.passed and c.name not in ADVISORY]
    if failed:
        msg = "solvability conditions violated: " + "; ".join(failed)
        if all(name in TRANSVERSALITY for name in failed):
            raise TransversalityLoss(msg, rep)
        raise HypothesisError(msg, rep)
    return rep


def solve_initial_strip(ham: Hamiltonian, data: CauchyData, zeta: float,
                        guess: Optional[tuple] = None, cap: Optional[float] = None,
                        max_iter: int = 50) -> tuple:
    """(p, q) solving H(T, S, R, p, q) = 0 and p T' + q S' = R' near ``guess``."""
    (t, s, r), (dT, dS, dR) = data.curve(zeta)
    p0, q0 = (float(v) for v in data.strip_seed)
    start = np.array(guess if guess is not None else (p0, q0), dtype=float)
    if cap is None:
        cap = 0.5 * math.hypot(p0, q0) + 0.5
    x = start.copy()
    for _ in range(max_iter):
        hv = ham(t, s, r, x[0], x[1])
        g = np.array([hv.H, x[0] * dT + x[1] * dS - dR])
        jac = np.array([[hv.H_p, hv.H_q], [dT, dS]])
        det = hv.H_p * dS - hv.H_q * dT
        if abs(det) <= TRANSVERSAL_TOL:
            raise TransversalityLoss(
                f"initial curve is characteristic at zeta = {zeta!r} (det = {det:.3g})")
        step = np.linalg.solve(jac, g)
        x = x - step
        if np.linalg.norm(x - start) > cap:
            raise StripRootFailure(
                f"initial-strip Newton left the seeded branch at zeta = {zeta!r}")
        if np.max(np.abs(step)) <= 4 * np.finfo(float).eps * max(1.0, np.max(np.abs(x))):
            break
    hv = ham(t, s, r, x[0], x[1])
    res = max(abs(hv.H), abs(x[0] * dT + x[1] * dS - dR))
    if res > ROOT_TOL * max(1.0, abs(dR), np.max(np.abs(x))):
        raise StripRootFailure(f"initial-strip residual {res:.3g} at zeta = {zeta!r}")
    det = dT * hv.H_q - dS * hv.H_p
    if abs(det) <= TRANSVERSAL_TOL:
        raise TransversalityLoss(
            f"initial curve is characteristic at zeta = {zeta!r} (det = {det:.3g})")
    return float(x[0]), float(x[1])


# -- strips ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CharacteristicStrip:
    zeta: float
    sigma: np.ndarray
    states: np.ndarray
    rates: np.ndarray
    hamiltonian_drift: float
    terminations: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma.size >= 2:
            object.__setattr__(self, "_spline",
                               CubicHermiteSpline(self.sigma, self.states, self.rates, axis=0))

    @property
    def sigma_range(self) -> tuple:
        return float(self.sigma[0]), float(self.sigma[-1])

    def at(self, sigma: float) -> np.ndarray:
        k = int(np.searchsorted(self.sigma, sigma))
        if k < self.sigma.size and self.sigma[k] == sigma:
            return self.states[k].copy()
        return self._spline(sigma)

    def rate(self, sigma: float) -> np.ndarray:
        k = int(np.searchsorted(self.sigma, sigma))
        if k < self.sigma.size and self.sigma[k] == sigma:
            return self.rates[k].copy()
        return self._spline(sigma, 1)

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta,
            "hamiltonian_drift": self.hamiltonian_drift,
            "terminations": {k: v.to_dict() for k, v in self.terminations.items()},
            "samples": [[float(sg), *map(float, st)] for sg, st in zip(self.sigma, self.states)],
        }


def integrate_strip(ham: Hamiltonian, start, sigma_span=(-0.3, 0.3), tol: float = 1e-10,
                    zeta: float = 0.0, max_step: Optional[float] = None) -> CharacteristicStrip:
    """Integrate the characteristic system from sigma = 0 in both directions."""
    y0 = np.asarray(start, dtype=float)
    h0 = ham.value(*y0)
    if abs(h0) > SEED_TOL:
        raise DriftViolation(f"strip start has H = {h0!r}")
    problem = ham.problem
    lo, hi = (float(v) for v in sigma_span)
    if not lo <= 0.0 <= hi:
        raise ValueError("sigma span must contain 0")
    if max_step is None:
        max_step = max(hi - lo, 1e-12) / 64.0

    def fun(_, y):
        return ham.rhs(y)

    def accept(_, y):
        if not problem.inside(y[0], y[1]):
            return "domain"
        if abs(ham.value(*y)) > DRIFT_TOL:
            return "drift"
        return None

    pieces, terms = {}, {}
    for key, end in (("upper", hi), ("lower", lo)):
        res = ode.integrate(fun, 0.0, y0, end, tol, max_step=max_step, accept=accept)
        pieces[key] = res
        s_last = float(res.t[-1])
        if res.status == "success":
            terms[key] = Termination("SpanEnd", s_last)
        elif res.reason == "domain":
            terms[key] = Termination("DomainEdge", s_last)
        elif res.reason == "drift":
            if not res.progressed:
                raise DriftViolation(f"H drift exceeds {DRIFT_TOL} at the strip start (zeta = {zeta!r})")
            terms[key] = Termination("DriftLimit", s_last)
        else:
            if not res.progressed:
                raise StepFailure(f"strip at zeta = {zeta!r} made no progress: "
                                  f"{res.error or res.reason}")
            terms[key] = Termination("StepFailure", s_last, str(res.error or res.reason))
    up, dn = pieces["upper"], pieces["lower"]
    sig = np.array(dn.t[:0:-1] + up.t, dtype=float)
    st = np.array(dn.y[:0:-1] + up.y, dtype=float)
    rt = np.array(dn.f[:0:-1] + up.f, dtype=float)
    drift = max(abs(ham.value(*y)) for y in st)
    return CharacteristicStrip(float(zeta), sig, st, rt, float(drift), terms)


# -- the strip fan -----------------------------------------------------------------

def _fd_weights(offsets) -> np.ndarray:
    """First-derivative weights at 0 for the given (unit-spaced) stencil offsets."""
    x = np.asarray(offsets, dtype=float)
    n = x.size
    V = np.vander(x, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def _stencil(j: int, n: int, width: int = 5) -> list:
    width = min(width, n)
    lo = min(max(0, j - width // 2), n - width)
    return list(range(lo, lo + width))


@dataclass(frozen=True, eq=False)
class Solution2D:
    strips: list
    zetas: np.ndarray
    ranges: list
    hypotheses: dict
    meta: dict = field(default_factory=dict)

    @property
    def single(self) -> bool:
        return len(self.strips) == 1

    @property
    def dz(self) -> float:
        return float(self.zetas[1] - self.zetas[0]) if len(self.zetas) > 1 else 1.0

    @property
    def hamiltonian_drift(self) -> float:
        return max(s.hamiltonian_drift for s in self.strips)

    @property
    def base_domain(self) -> list:
        pts = np.concatenate([s.states[:, :2] for s in self.strips])
        return [[float(pts[:, 0].min()), float(pts[:, 0].max())],
                [float(pts[:, 1].min()), float(pts[:, 1].max())]]

    # interpolation in (zeta, sigma)

    def _node_derivative(self, j: int, sigma: float) -> np.ndarray:
        idx = _stencil(j, len(self.strips))
        w = _fd_weights([k - j for k in idx])
        return sum(wk * self.strips[k].at(sigma) for wk, k in zip(w, idx)) / self.dz

    def sigma_limits(self, zeta: float) -> tuple:
        if self.single:
            return self.ranges[0]
        j = self._interval(zeta)
        a, b = self.ranges[j], self.ranges[j + 1]
        return max(a[0], b[0]), min(a[1], b[1])

    def _interval(self, zeta: float) -> int:
        n = len(self.zetas)
        j = int(np.searchsorted(self.zetas, zeta, side="right")) - 1
        return min(max(j, 0), n - 2)

    def state(self, zeta: float, sigma: float):
        """Interpolated (t, s, r, p, q) and its partials in zeta and sigma."""
        if self.single:
            st = self.strips[0]
            return st.at(sigma), np.zeros(5), st.rate(sigma)
        j = self._interval(zeta)
        h = self.dz
        u = (zeta - self.zetas[j]) / h
        y0, y1 = self.strips[j].at(sigma), self.strips[j + 1].at(sigma)
        r0, r1 = self.strips[j].rate(sigma), self.strips[j + 1].rate(sigma)
        m0, m1 = self._node_derivative(j, sigma) * h, self._node_derivative(j + 1, sigma) * h
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        y = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
        d00, d10, d01, d11 = 6 * u**2 - 6 * u, 3 * u**2 - 4 * u + 1, -6 * u**2 + 6 * u, 3 * u**2 - 2 * u
        dy_dz = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h
        dy_ds = h00 * r0 + h01 * r1 + h10 * self._rate_derivative(j, sigma) * h \
            + h11 * self._rate_derivative(j + 1, sigma) * h
        return y, dy_dz, dy_ds

    def _rate_derivative(self, j: int, sigma: float) -> np.ndarray:
        idx = _stencil(j, len(self.strips))
        w = _fd_weights([k - j for k in idx])
        return sum(wk * self.strips[k].rate(sigma) for wk, k in zip(w, idx)) / self.dz

    def covers(self, zeta: float, sigma: float, slack: float = 0.0) -> bool:
        if not self.zetas[0] - slack <= zeta <= self.zetas[-1] + slack:
            return False
        lo, hi = self.sigma_limits(min(max(zeta, self.zetas[0]), self.zetas[-1]))
        return lo - slack <= sigma <= hi + slack

    def _nearest_sample(self, t: float, s: float):
        best, arg = math.inf, None
        for j, st in enumerate(self.strips):
            lo, hi = self.ranges[j]
            mask = (st.sigma >= lo) & (st.sigma <= hi)
            if not mask.any():
                continue
            d = np.hypot(st.states[mask, 0] - t, st.states[mask, 1] - s)
            k = int(np.argmin(d))
            if d[k] < best:
                best, arg = float(d[k]), (j, int(np.flatnonzero(mask)[k]))
        return best, arg

    def invert(self, t: float, s: float, max_iter: int = 50) -> tuple:
        """(zeta, sigma) with (t, s) = Phi(zeta, sigma)."""
        dist, arg = self._nearest_sample(t, s)
        if arg is None:
            raise OutsideCoverage("solution has no covered samples")
        j, k = arg
        zeta, sigma = float(self.zetas[j]), float(self.strips[j].sigma[k])
        if dist == 0.0:
            return zeta, sigma
        scale = max(1.0, abs(t), abs(s))
        for _ in range(max_iter):
            y, dz, ds = self.state(zeta, sigma)
            g = np.array([y[0] - t, y[1] - s])
            if np.max(np.abs(g)) <= 1e-13 * scale:
                break
            if self.single:
                v = ds[:2]
                nv = float(v @ v)
                if nv == 0:
                    raise InversionFailure("degenerate strip tangent")
                step = float(g @ v) / nv
                sigma -= step
                # off-strip queries converge to the foot point, not to zero residual
                if abs(step) <= 1e-15 * max(1.0, abs(sigma)):
                    break
            else:
                jac = np.array([[dz[0], ds[0]], [dz[1], ds[1]]])
                try:
                    step = np.linalg.solve(jac, g)
                except np.linalg.LinAlgError as exc:
                    raise InversionFailure(f"singular characteristic map near ({t}, {s})") from exc
                zeta -= float(step[0])
                sigma -= float(step[1])
            if not self.covers(zeta, sigma, slack=0.5 * self.dz if not self.single else 0.0):
                raise OutsideCoverage(f"({t!r}, {s!r}) lies outside the covered region")
        else:
            raise InversionFailure(f"Newton inversion did not converge at ({t!r}, {s!r})")
        y, _, _ = self.state(zeta, sigma)
        miss = math.hypot(y[0] - t, y[1] - s)
        if self.single and miss > 1e-9 * scale:
            raise OutsideCoverage(f"({t!r}, {s!r}) is not on the single strip (distance {miss:.3g})")
        if miss > 1e-10 * scale:
            raise InversionFailure(f"inversion residual {miss:.3g} at ({t!r}, {s!r})")
        if not self.covers(zeta, sigma, slack=1e-12):
            raise OutsideCoverage(f"({t!r}, {s!r}) lies outside the covered region")
        return zeta, sigma

    def evaluate(self, t: float, s: float) -> tuple:
        zeta, sigma = self.invert(float(t), float(s))
        y, _, _ = self.state(zeta, sigma)
        return float(y[2]), float(y[3]), float(y[4])

    def sample_parameters(self, rng: np.random.Generator, margin: float = 0.02) -> tuple:
        if self.single:
            zeta = float(self.zetas[0])
        else:
            span = self.zetas[-1] - self.zetas[0]
            zeta = float(rng.uniform(self.zetas[0] + margin * span, self.zetas[-1] - margin * span))
        lo, hi = self.sigma_limits(zeta)
        pad = margin * (hi - lo)
        sigma = float(rng.uniform(lo + pad, hi - pad))
        y, _, _ = self.state(zeta, sigma)
        return float(y[0]), float(y[1])

    def coverage_polygon(self) -> list:
        """Boundary of the covered (t, s) region, counter-clockwise in (zeta, sigma)."""
        pts = []
        n = len(self.strips)
        for j in range(n):
            pts.append(self.strips[j].at(self.ranges[j][0])[:2])
        for sg in np.linspace(*self.ranges[-1], 9)[1:-1]:
            pts.append(self.strips[-1].at(sg)[:2])
        for j in reversed(range(n)):
            pts.append(self.strips[j].at(self.ranges[j][1])[:2])
        if n > 1:
            for sg in np.linspace(*self.ranges[0], 9)[::-1][1:-1]:
                pts.append(self.strips[0].at(sg)[:2])
        return [[float(a), float(b)] for a, b in pts]

    def to_dict(self) -> dict:
        return {
            "hypotheses": self.hypotheses,
            "meta": self.meta,
            "hamiltonian_drift": self.hamiltonian_drift,
            "base_domain": self.base_domain,
            "covered_sigma": [[float(a), float(b)] for a, b in self.ranges],
            "strips": [s.to_dict() for s in self.strips],
        }

    def coverage_dict(self) -> dict:
        return {"polygon": self.coverage_polygon(), "base_domain": self.base_domain,
                "zeta": [float(z) for z in self.zetas],
                "covered_sigma": [[float(a), float(b)] for a, b in self.ranges]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zeta", "sigma", "t", "s", "r", "p", "q"])
        for st in self.strips:
            for sg, y in zip(st.sigma, st.states):
                w.writerow([format(float(v), ".17g") for v in (st.zeta, sg, *y)])
        return buf.getvalue()


def _continuation_order(zetas: np.ndarray) -> list:
    """Indices visited outward from the node nearest zeta = 0."""
    k0 = int(np.argmin(np.abs(zetas)))
    up = list(range(k0, len(zetas)))
    down = list(range(k0 - 1, -1, -1))
    return up + down, k0


def _truncate_caustics(strips, zetas, dz) -> list:
    """Per-strip sigma range around 0 on which the map keeps a nonzero Jacobian."""
    n = len(strips)
    if n == 1:
        return [strips[0].sigma_range]
    ranges = []
    common = (max(s.sigma_range[0] for s in strips), min(s.sigma_range[1] for s in strips))
    for j in range(n):
        st = strips[j]
        idx = _stencil(j, n)
        w = _fd_weights([k - j for k in idx])
        sig = st.sigma[(st.sigma >= common[0]) & (st.sigma <= common[1])]
        if sig.size == 0 or not (sig[0] <= 0 <= sig[-1]):
            raise CoverageFailure(f"strip {j} shares no sigma range with its neighbours")
        dets = []
        for sg in sig:
            dzv = sum(wk * strips[k].at(sg) for wk, k in zip(w, idx)) / dz
            dsv = st.rate(sg)
            dets.append(dzv[0] * dsv[1] - dzv[1] * dsv[0])
        dets = np.asarray(dets)
        i0 = int(np.argmin(np.abs(sig)))
        ref = dets[i0]
        scale = max(1e-300, np.max(np.abs(dets)))
        if abs(ref) <= 1e-12 * scale or ref == 0:
            raise CoverageFailure(f"characteristic map degenerate at zeta = {zetas[j]!r}")
        good = (np.sign(dets) == np.sign(ref)) & (np.abs(dets) > 1e-8 * abs(ref))
        a = i0
        while a > 0 and good[a - 1]:
            a -= 1
        b = i0
        while b < sig.size - 1 and good[b + 1]:
            b += 1
        ranges.append((float(sig[a]), float(sig[b])))
    # a node's range must also be valid for every strip in its FD stencil
    out = []
    for j in range(n):
        idx = _stencil(j, n)
        out.append((max(ranges[k][0] for k in idx), min(ranges[k][1] for k in idx)))
    return out


def solve_cauchy(problem: ReducedProblem2D, data: CauchyData, zeta_grid: int = 21,
                 sigma_span=(-0.3, 0.3), tol: float = 1e-10) -> Solution2D:
    """Fan of characteristic strips from a uniform zeta grid on the initial curve."""
    report = require_hypotheses_2d(problem, data)
    if zeta_grid < 1:
        raise ValueError("zeta_grid must be >= 1")
    ham = Hamiltonian(problem)
    zlo, zhi = (float(v) for v in data.zeta_range)
    zetas = np.array([0.0]) if zeta_grid == 1 else np.linspace(zlo, zhi, zeta_grid)
    order, k0 = _continuation_order(zetas)
    seeds: dict = {}
    guess = None
    if zetas[k0] != 0.0:
        guess = solve_initial_strip(ham, data, 0.0)
    for k in order:
        if k == k0 - 1:
            guess = seeds[k0]
        g = solve_initial_strip(ham, data, float(zetas[k]), guess)
        seeds[k] = g
        guess = g
    strips = []
    for k, z in enumerate(zetas):
        (t, s, r), _ = data.curve(float(z))
        p, q = seeds[k]
        strips.append(integrate_strip(ham, (t, s, r, p, q), sigma_span, tol, zeta=float(z)))
    dz = float(zetas[1] - zetas[0]) if len(zetas) > 1 else 1.0
    ranges = _truncate_caustics(strips, zetas, dz)
    meta = {"zeta_grid": int(zeta_grid), "zeta_range": [zlo, zhi],
            "sigma_span": [float(v) for v in sigma_span], "tol": tol,
            "strip_seed": [float(v) for v in data.strip_seed]}
    return Solution2D(strips, zetas, ranges, report.to_dict(), meta)


def evaluate_solution_2d(sol: Solution2D, point) -> tuple:
    return sol.evaluate(*point)


# -- lifting -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LiftedField2D:
    """u(x, z) = w(f_L(x), f_N(z)) on a warped product."""

    solution: Solution2D
    f_L: object
    f_N: object
    model: object

    def _split(self, x):
        k = self.model.base.coord_dim
        x = np.asarray(x, dtype=float)
        return x[:k], x[k:]

    def value(self, x) -> float:
        xl, xn = self._split(x)
        return self.solution.evaluate(self.f_L.value(xl), self.f_N.value(xn))[0]

    __call__ = value

    def differential(self, x) -> np.ndarray:
        xl, xn = self._split(x)
        _, p, q = self.solution.evaluate(self.f_L.value(xl), self.f_N.value(xn))
        return np.concatenate([p * np.asarray(self.f_L.differential(xl), dtype=float),
                               q * np.asarray(self.f_N.differential(xn), dtype=float)])

    def sample_parameters(self, rng: np.random.Generator) -> tuple:
        return self.solution.sample_parameters(rng)


def lift_2d(sol: Solution2D, f_L, f_N, model) -> LiftedField2D:
    (tlo, thi), (slo, shi) = sol.base_domain
    if not (f_L.image.in_closure(tlo) and f_L.image.in_closure(thi)
            and f_N.image.in_closure(slo) and f_N.image.in_closure(shi)):
        raise OutsideCoverage("covered region is not inside Im f_L x Im f_N")
    return LiftedField2D(sol, f_L, f_N, model)
