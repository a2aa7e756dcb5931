"""Optimal-weight convexity machinery for nonlinear boundary damping.

From the growth envelope g of the feedback we build

    H(x) = sqrt(x) g(sqrt(x)) on [0, r0^2],   H^ = H there and +inf elsewhere,
    L(y) = H^*(y) / y,   Lambda_H(x) = H(x) / (x H'(x)),
    psi0(x) = 1/H'(r0^2) + int_{1/x}^{H'(r0^2)} dy / (y^2 (1 - Lambda_H((H')^{-1}(y)))),

and the energy envelope E(t) <= 2 gamma L(1 / psi0^{-1}(t / M)) for t >= M / H'(r0^2).
gamma and M are existential in the theory; here they are calibrated from a trace.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _kernels as kern
from .discretization import EnergyTrace, NonlinearDamped
from .dynamics import Bump, FeedbackLaw, SimConfig, run
from .weights import Weight


class DecayError(ValueError):
    pass


GRID_POINTS = 2000
GOLDEN_ITERS = 100
R0_DEFAULT = 0.5
R0_MIN = 1e-4
TINY = 1e-250  # smallest H' value kept on the model grid (exp-type laws underflow below)
X_SPAN = 1e-60  # the model grid covers [X_SPAN r0^2, r0^2] unless H' underflows first


def _as_array(v):
    return np.atleast_1d(np.asarray(v, dtype=float))


def _shape_like(out, v):
    return float(out[0]) if np.ndim(v) == 0 else out.reshape(np.shape(v))


@dataclass
class DecayModel:
    """Numerical H, H^*, L, L^{-1}, Lambda_H and psi0 for one feedback law."""

    law: FeedbackLaw
    r0: float
    halvings: int
    exponential_regime: bool
    x_grid: np.ndarray = field(repr=False)
    H_grid: np.ndarray = field(repr=False)
    gamma: Optional[float] = None
    M: Optional[float] = None

    def __post_init__(self):
        self._p = (self.law.law_id, float(self.law.p), float(self.law.q))
        xs = np.concatenate([[0.0], self.x_grid])
        hs = np.concatenate([[0.0], self.H_grid])
        self._xs = xs
        self._chords = np.diff(hs) / np.diff(xs)
        self._L_table = None
        self._psi_table = None

    # -- H and friends -------------------------------------------------------
    @property
    def x_max(self) -> float:
        return self.r0 * self.r0

    @property
    def y0(self) -> float:
        """H'(r0^2)."""
        return float(kern.hp_of(*self._p, self.x_max))

    def H(self, x):
        return _shape_like(kern.h_array(*self._p, _as_array(x)), x)

    def H_prime(self, x):
        return _shape_like(kern.hp_array(*self._p, _as_array(x)), x)

    def H_prime_inv(self, y):
        return _shape_like(kern.hprime_inverse(*self._p, _as_array(y), self.x_max), y)

    def LambdaH(self, x):
        xa = _as_array(x)
        if np.any(xa <= 0) or np.any(xa > self.x_max * (1 + 1e-12)):
            raise DecayError("Lambda_H is evaluated on (0, r0^2]")
        h = kern.h_array(*self._p, xa)
        hp = kern.hp_array(*self._p, xa)
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(hp > 0, h / (xa * hp), 0.0)
        return _shape_like(lam, x)

    def lambda_sup(self) -> float:
        return float(np.max(self.LambdaH(self.x_grid)))

    def lambda_limsup(self) -> float:
        """max of Lambda_H over the lowest decade of the model grid (proxy for limsup at 0+)."""
        x = self.x_grid[self.x_grid <= 10 * self.x_grid[0]]
        return float(np.max(self.LambdaH(x)))

    @property
    def simplified_available(self) -> bool:
        return not self.exponential_regime and self.lambda_limsup() < 1.0 - 1e-9

    # -- convex conjugate ------------------------------------------------------
    def conjugate(self, y):
        """(H^*(y), argmax) by grid maximisation plus golden-section refinement."""
        ya = _as_array(y)
        val = np.zeros_like(ya)
        arg = np.zeros_like(ya)
        pos = ya > 0
        if np.any(pos):
            yp = ya[pos]
            # x y - H(x) increases along the grid while the chord slope is below y
            k = np.searchsorted(self._chords, yp)
            last = self._xs.size - 1
            lo = self._xs[np.maximum(k - 1, 0)]
            hi = self._xs[np.minimum(k + 1, last)]
            v, a = kern.conjugate_refine(*self._p, yp, lo, hi, GOLDEN_ITERS)
            grid_best = self._xs[k] * yp - np.concatenate([[0.0], self.H_grid])[k]
            better = grid_best > v
            v[better] = grid_best[better]
            a[better] = self._xs[k][better]
            val[pos], arg[pos] = v, a
        return val, arg

    def Hstar(self, y):
        return _shape_like(self.conjugate(y)[0], y)

    def L(self, y):
        ya = _as_array(y)
        if np.any(ya < 0):
            raise DecayError("L is defined on [0, inf)")
        hs, _ = self.conjugate(ya)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(ya > 0, hs / np.where(ya > 0, ya, 1.0), 0.0)
        return _shape_like(out, y)

    def _table(self):
        if self._L_table is None:
            y = np.geomspace(max(self.H_prime(self.x_grid[0]), TINY), self.y0 * 1e12, 4000)
            self._L_table = (y, _as_array(self.L(y)))
        return self._L_table

    def Linv(self, z, iters: int = 80):
        """Monotone inverse of L: bracket from a table, then bisection on L itself."""
        za = _as_array(z)
        if np.any(za < 0) or np.any(za >= self.x_max):
            raise DecayError("L^{-1} is defined on [0, r0^2)")
        yt, lt = self._table()
        out = np.zeros_like(za)
        top = za > lt[-1]
        # beyond the table the maximiser sits at r0^2: L(y) = r0^2 - H(r0^2) / y exactly
        out[top] = self.H(self.x_max) / (self.x_max - za[top])
        mid = (za > 0) & ~top
        if np.any(mid):
            zm = za[mid]
            k = np.searchsorted(lt, zm)
            lo = np.where(k > 0, yt[np.maximum(k - 1, 0)], 0.0)
            hi = yt[np.minimum(k, yt.size - 1)]
            for _ in range(iters):
                # sqrt(lo) sqrt(hi): lo * hi underflows for y below 1e-154
                m = np.where(lo > 0, np.sqrt(lo) * np.sqrt(hi), 0.5 * hi)
                below = _as_array(self.L(m)) < zm
                lo = np.where(below, m, lo)
                hi = np.where(below, hi, m)
                if np.all(hi - lo <= 1e-15 * hi):
                    break
            out[mid] = 0.5 * (lo + hi)
        return _shape_like(out, z)

    # -- psi0 ------------------------------------------------------------------
    def _psi_integrand(self, u):
        """Integrand of psi0 in u = ln y: 1 / (y (1 - Lambda_H((H')^{-1}(y))))."""
        y = math.exp(u)
        x = kern.hprime_inverse(*self._p, np.array([y]), self.x_max)[0]
        lam = self.LambdaH(x) if x > 0 else 0.0
        return 1.0 / (y * (1.0 - lam))

    def _psi(self):
        if self._psi_table is None:
            if self.exponential_regime:
                raise DecayError("psi0 is undefined in the exponential regime (Lambda_H = 1)")
            u_top = math.log(self.y0)
            u_bot = math.log(max(self.H_prime(self.x_grid[0]), TINY))
            u = np.linspace(u_bot, u_top, 801)
            seg = np.array([quad(self._psi_integrand, u[i], u[i + 1], epsabs=0, epsrel=1e-10, limit=200)[0]
                            for i in range(u.size - 1)])
            tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # int_{u_i}^{u_top}
            self._psi_table = (u, tail)
        return self._psi_table

    def _tail(self, uq: float) -> float:
        u, tail = self._psi()
        if uq < u[0] or uq > u[-1]:
            raise DecayError("argument outside the psi0 table")
        i = min(int(np.searchsorted(u, uq, side="right")) - 1, u.size - 2)
        return tail[i + 1] + quad(self._psi_integrand, uq, u[i + 1], epsabs=0, epsrel=1e-10, limit=200)[0]

    def psi0(self, x: float) -> float:
        if x < 1.0 / self.y0 * (1 - 1e-14):
            raise DecayError("psi0 is defined for x >= 1/H'(r0^2)")
        return 1.0 / self.y0 + self._tail(min(math.log(1.0 / x), math.log(self.y0)))

    def psi0_inv(self, s: float) -> float:
        """x with psi0(x) = s, by bisection (brentq) inside the bracketing table cell."""
        u, tail = self._psi()
        base = 1.0 / self.y0
        if s < base:
            raise DecayError("psi0^{-1} is defined on [1/H'(r0^2), inf)")
        if s - base > tail[0]:
            return math.nan
        if s == base:
            return base
        target = s - base
        # tail decreases in u
        j = int(np.searchsorted(-tail, -target))
        a, b = u[max(j - 1, 0)], u[min(j, u.size - 1)]
        if a == b:
            return math.exp(-a)
        root = brentq(lambda q: self._tail(q) - target, a, b, xtol=1e-14, rtol=1e-14)
        return math.exp(-root)

    def summary(self) -> dict:
        out = {"law": self.law.label(), "r0": self.r0, "halvings": self.halvings,
               "exponential_regime": self.exponential_regime, "H_prime_r0sq": self.y0,
               "gamma": self.gamma, "M": self.M}
        if not self.exponential_regime:
            out.update(L_at_y0=float(self.L(self.y0)), lambdaH_sup=self.lambda_sup(),
                       lambdaH_limsup=self.lambda_limsup())
        return out


def _x_grid(law: FeedbackLaw, r0: float, points: int) -> np.ndarray:
    p = (law.law_id, float(law.p), float(law.q))
    hi = math.log(r0 * r0)
    lo = hi + math.log(X_SPAN)
    if kern.hp_of(*p, math.exp(lo)) < TINY or kern.h_of(*p, math.exp(lo)) <= 0:
        a, b = lo, hi
        for _ in range(200):
            m = 0.5 * (a + b)
            if kern.hp_of(*p, math.exp(m)) < TINY or kern.h_of(*p, math.exp(m)) <= 0:
                a = m
            else:
                b = m
        lo = b
    return np.geomspace(math.exp(lo), r0 * r0, points)


def strictly_convex(x: np.ndarray, h: np.ndarray) -> bool:
    """Chord slopes (including the chord from 0) strictly increasing."""
    xs = np.concatenate([[0.0], x])
    hs = np.concatenate([[0.0], h])
    c = np.diff(hs) / np.diff(xs)
    return bool(np.all(np.diff(c) > 0))


def build_decay_model(law: FeedbackLaw, r0: float = R0_DEFAULT, points: int = GRID_POINTS) -> DecayModel:
    """Model on a log-spaced grid of (0, r0^2]; r0 is halved until H is strictly convex.

    Linear feedback gives a linear H, the exponential-decay regime, returned as a marked model."""
    if not 0 < r0 <= 1:
        raise DecayError("r0 must lie in (0, 1]")
    r0 = min(r0, law.s0)
    p = (law.law_id, float(law.p), float(law.q))
    if law.kind == "linear":
        x = np.geomspace(r0 * r0 * X_SPAN, r0 * r0, points)
        return DecayModel(law, r0, 0, True, x, kern.h_array(*p, x))
    halvings = 0
    while r0 >= R0_MIN:
        x = _x_grid(law, r0, points)
        h = kern.h_array(*p, x)
        if strictly_convex(x, h) and np.all(np.diff(kern.hp_array(*p, x)) > 0):
            return DecayModel(law, r0, halvings, False, x, h)
        r0 *= 0.5
        halvings += 1
    raise DecayError(f"H is not strictly convex near 0 for {law.label()}")


# -- envelopes -----------------------------------------------------------------

@dataclass
class Envelope:
    t: np.ndarray
    full: np.ndarray  # nan where undefined (t < M / H'(r0^2) or beyond the tables)
    simplified: Optional[np.ndarray]
    t_valid: float
    gamma: float
    M: float
    kappa: Optional[float]


def gamma_floor(m: DecayModel, E0: float) -> float:
    """The structural requirement gamma > E(0) / (2 L(H'(r0^2)))."""
    return E0 / (2.0 * float(m.L(m.y0)))


def predict_envelope(m: DecayModel, E0: float, gamma: float, M: float, t, kappa: Optional[float] = None) -> Envelope:
    if m.exponential_regime:
        raise DecayError("linear feedback: exponential regime, use the linear stabilization estimate")
    if gamma <= gamma_floor(m, E0):
        raise DecayError(f"gamma must exceed E0 / (2 L(H'(r0^2))) = {gamma_floor(m, E0):.6g}")
    if M <= 0:
        raise DecayError("M must be positive")
    t = np.asarray(t, dtype=float)
    t_valid = M / m.y0
    full = np.full(t.shape, np.nan)
    for i, ti in enumerate(t):
        if ti >= t_valid:
            x = m.psi0_inv(ti / M)
            if math.isfinite(x):
                full[i] = 2.0 * gamma * float(m.L(1.0 / x))
    simp = None
    if kappa is not None and m.simplified_available:
        simp = np.full(t.shape, np.nan)
        ok = t > 0
        arg = np.where(ok, kappa * M / np.where(ok, t, 1.0), np.inf)
        inside = ok & (arg <= m.y0)
        if np.any(inside):
            simp[inside] = 2.0 * gamma * _as_array(m.H_prime_inv(arg[inside]))
    return Envelope(t, full, simp, t_valid, gamma, M, kappa)


# -- the weighted integral inequality -----------------------------------------

@dataclass
class IntegralReport:
    gamma: float
    M_min: float
    S_samples: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)

    def holds_with(self, M: float) -> bool:
        return bool(self.M_min <= M)


def _cumtrapz(y, t):
    return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))])


def optimal_weight(m: DecayModel, E, gamma: float):
    """w(s) = L^{-1}(E(s) / (2 gamma))."""
    return _as_array(m.Linv(_as_array(E) / (2.0 * gamma)))


def verify_integral_inequality(times, energy, m: DecayModel, gamma: float) -> IntegralReport:
    """Smallest M with int_S^T L^{-1}(E/2gamma) E dt <= M E(S) over all recorded S."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(energy, dtype=float)
    if np.all(E == 0):
        return IntegralReport(gamma, 0.0, t, np.zeros_like(t))
    w = optimal_weight(m, E, gamma)
    cum = _cumtrapz(w * E, t)
    tail = cum[-1] - cum
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(E > 0, tail / np.where(E > 0, E, 1.0), 0.0)
    return IntegralReport(gamma, float(np.max(ratios)), t, ratios)


@dataclass
class Calibration:
    gamma: float
    gamma_floor: float
    M: float
    kappa: Optional[float]
    t_valid: float
    dominated: bool
    worst_ratio: float  # max E_sim / E_pred over the checked times
    checked: int
    simplified_dominated: Optional[bool] = None

    def to_dict(self) -> dict:
        return asdict(self)


def calibrate(trace: EnergyTrace, m: DecayModel, gamma_margin: float = 1.01,
              max_points: int = 400) -> tuple[Calibration, Envelope]:
    """gamma just above its structural floor, M the smallest constant making the integral
    inequality hold on the trace, kappa the smallest making the simplified envelope dominate.
    Domination of the full envelope is then checked at up to ``max_points`` recorded times."""
    t, E = trace.times, trace.energy
    if E[0] <= 0:
        raise DecayError("trace has zero energy")
    floor = gamma_floor(m, E[0])
    gamma = float(gamma_margin * floor)
    M = verify_integral_inequality(t, E, m, gamma).M_min
    if M <= 0:
        raise DecayError("integral inequality is degenerate on this trace")
    t_valid = M / m.y0
    idx = np.nonzero(t >= t_valid)[0]
    if idx.size > max_points:
        idx = idx[np.unique(np.linspace(0, idx.size - 1, max_points).astype(int))]
    kappa = None
    if m.simplified_available and idx.size:
        # kappa M / t >= H'(E / 2 gamma) is the simplified-envelope condition
        ts = t[idx]
        need = ts * _as_array(m.H_prime(np.minimum(E[idx] / (2 * gamma), m.x_max))) / M
        kappa = float(np.max(need))
    env = predict_envelope(m, E[0], gamma, M, t[idx], kappa)
    ok = np.isfinite(env.full)
    ratio = E[idx][ok] / env.full[ok]
    worst = float(np.max(ratio)) if ratio.size else 0.0
    simp_ok = None
    if env.simplified is not None:
        s_ok = np.isfinite(env.simplified)
        simp_ok = bool(np.all(E[idx][s_ok] <= env.simplified[s_ok] * (1 + 1e-12)))
    cal = Calibration(gamma, float(floor), M, kappa, t_valid, bool(np.all(ratio <= 1 + 1e-9)), worst,
                      int(ok.sum()), simp_ok)
    m.gamma, m.M = gamma, M
    return cal, env


# -- fitting ---------------------------------------------------------------------

@dataclass
class DecayFit:
    family: str
    exponent: float
    r2: float
    t_start: float
    t_end: float
    points: int
    expected: Optional[float] = None

    @property
    def relative_error(self) -> Optional[float]:
        if self.expected is None:
            return None
        return abs(self.exponent - self.expected) / abs(self.expected)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relative_error"] = self.relative_error
        return d


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(coef[0]), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_decay_rate(times, energy, family: str, expected: Optional[float] = None,
                   min_drop: float = 1e3, window: float = 0.1) -> DecayFit:
    """Fit over the final stretch [window T, T] of the trace (the final decade by default).

    ``exponential``: slope of ln E against t; ``power``: slope of ln E against ln t.
    """
    t = np.asarray(times, dtype=float)
    E = np.asarray(energy, dtype=float)
    if t.size < 10:
        raise DecayError("trace too short")
    if E[0] <= 0 or np.all(E == 0):
        raise DecayError("trace has zero energy")
    drop = E[0] / max(E[-1], 1e-300)
    if drop < min_drop:
        raise DecayError(f"energy dropped by {drop:.3g} < {min_drop:g}; trace too short")
    keep = (t >= window * t[-1]) & (E > 0)
    if family == "exponential":
        x = t[keep]
    elif family == "power":
        keep &= t > 0
        x = np.log(t[keep])
    else:
        raise DecayError(f"unknown fit family {family!r}")
    if x.size < 10:
        raise DecayError("trace too short for the fit window")
    slope, r2 = _linfit(x, np.log(E[keep]))
    return DecayFit(family, slope, r2, float(t[keep][0]), float(t[keep][-1]), int(x.size), expected)


# -- rate laws -------------------------------------------------------------------

@dataclass(frozen=True)
class RateLaw:
    """Asymptotic decay law of the energy for one feedback family.

    The fit regresses ``ln E - ln(prefactor(t))`` on ``coordinate(t)``; the slope is
    compared with ``expected``."""

    name: str
    expected: float
    description: str
    window: tuple = (10.0, 20.0)  # log10 t range where the envelope is in its asymptotic regime

    def coordinate(self, t):
        raise NotImplementedError

    def prefactor(self, t):
        return np.ones_like(t)


@dataclass(frozen=True)
class PowerRate(RateLaw):
    def coordinate(self, t):
        return np.log(t)


@dataclass(frozen=True)
class PowerLogRate(RateLaw):
    power: float = 1.0  # t^{-power} removed before regressing on ln ln t

    def coordinate(self, t):
        return np.log(np.log(t))

    def prefactor(self, t):
        return t ** (-self.power)


@dataclass(frozen=True)
class InverseLogRate(RateLaw):
    def coordinate(self, t):
        return np.log(np.log(t))


@dataclass(frozen=True)
class LogPowerRate(RateLaw):
    p: float = 3.0

    def coordinate(self, t):
        return np.log(t) ** (1.0 / self.p)


def rate_law(law: FeedbackLaw) -> RateLaw:
    """Closed-form decay laws for the standard feedback families."""
    if law.kind == "poly":
        e = -2.0 / (law.p - 1.0)
        return PowerRate("t^(-2/(p-1))", e, f"E ~ t^{e:.6g}")
    if law.kind == "polylog":
        pw = 2.0 / (law.p - 1.0)
        e = -2.0 * law.q / (law.p - 1.0)
        return PowerLogRate("t^(-2/(p-1)) ln(t)^(-2q/(p-1))", e, f"E t^{pw:.6g} ~ ln(t)^{e:.6g}",
                            (20.0, 40.0), pw)
    if law.kind == "expinvsq":
        return InverseLogRate("1/ln t", -1.0, "E ~ ln(t)^-1", (100.0, 200.0))
    if law.kind == "explogpow":
        return LogPowerRate("exp(-2 ln(t)^(1/p))", -2.0, f"ln E ~ -2 ln(t)^(1/{law.p:g})", (100.0, 200.0),
                            law.p)
    raise DecayError(f"no closed-form rate for {law.label()}")


def envelope_exponent(m: DecayModel, log10_t: Optional[tuple] = None, points: int = 40) -> DecayFit:
    """Fit the model envelope (gamma = M = 1, E0 below the gamma floor) against its rate law
    on t in [10^a, 10^b] (default: the law's asymptotic window)."""
    rl = rate_law(m.law)
    t = np.logspace(*(log10_t or rl.window), points)
    gamma = 1.0
    E0 = 1.9 * gamma * float(m.L(m.y0))
    env = predict_envelope(m, E0, gamma, 1.0, t)
    ok = np.isfinite(env.full) & (env.full > 0)
    if ok.sum() < 5:
        raise DecayError("envelope undefined on the requested window")
    x = rl.coordinate(t[ok])
    y = np.log(env.full[ok]) - np.log(rl.prefactor(t[ok]))
    slope, r2 = _linfit(x, y)
    return DecayFit(rl.name, slope, r2, float(t[ok][0]), float(t[ok][-1]), int(ok.sum()), rl.expected)


# -- simulations -------------------------------------------------------------------

def decay_run(law: FeedbackLaw, theta: float = 0.5, beta: float = 1.0, n: int = 400, T: float = 2000.0,
              data=None, dt: Optional[float] = None) -> EnergyTrace:
    """Nonlinearly damped run with a(x) = x^theta; default data is a bump centred at 0.5."""
    if beta <= 0:
        raise DecayError("stabilization experiments need beta > 0")
    data = data if data is not None else Bump(0.5, 0.5, 1.0)
    cfg = SimConfig(Weight.power(theta), n, T, data, bc_right=NonlinearDamped(beta, law), dt=dt)
    return run(cfg)


@dataclass
class DecayTableRow:
    law: str
    rate: str
    expected: float
    envelope_exponent: float
    envelope_r2: float
    simulated_exponent: Optional[float] = None
    simulated_r2: Optional[float] = None
    energy_drop: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TABLE_LAWS = ("poly:2", "poly:3", "polylog:3,1", "expinvsq", "explogpow:3")


def decay_table(laws: Sequence[str] = DEFAULT_TABLE_LAWS, simulate: Sequence[str] = ("poly:2", "poly:3"),
                theta: float = 0.5, beta: float = 1.0, n: int = 400, T: Optional[dict] = None) -> list[DecayTableRow]:
    """Fitted exponents of the model envelopes for each law; polynomial laws are also simulated."""
    T = T or {}
    rows = []
    for text in laws:
        law = FeedbackLaw.parse(text)
        m = build_decay_model(law)
        fit = envelope_exponent(m)
        row = DecayTableRow(law.label(), rate_law(law).name, fit.expected, fit.exponent, fit.r2)
        if text in simulate:
            tr = decay_run(law, theta, beta, n, T.get(text, default_decay_time(law)))
            sf = fit_decay_rate(tr.times, tr.energy, "power", fit.expected)
            row.simulated_exponent, row.simulated_r2 = sf.exponent, sf.r2
            row.energy_drop = float(tr.energy[0] / tr.energy[-1])
        rows.append(row)
    return rows


def default_decay_time(law: FeedbackLaw) -> float:
    """Run length that takes the default bump through a 10^3 energy drop at n = 400."""
    if law.kind == "poly":
        return {2.0: 2000.0, 3.0: 20000.0}.get(float(law.p), 20000.0)
    return 2000.0
