"""Degenerate diffusion coefficients a(x) on [0, 1] and their closed-form constants."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import minimize_scalar

WEAK = "weak"
STRONG = "strong"

_PROBE_POINTS = 100_000


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class Weight:
    """A coefficient a(x) that vanishes at x=0 and is positive on (0, 1].

    Use the constructors :meth:`power`, :meth:`oscillatory`, :meth:`tabulated`
    (admissible, mu_a < 2) or :meth:`nonadmissible_power` (any theta >= 0).
    """

    kind: str
    theta: float = 0.0
    alpha: float = 0.0
    mu_a: float = 0.0
    a_at_1: float = 1.0
    admissible: bool = True
    _table: Optional[tuple] = field(default=None, repr=False, compare=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def power(cls, theta: float) -> "Weight":
        if not 0.0 <= theta < 2.0:
            raise WeightError(f"power weight needs theta in [0, 2), got {theta}")
        return cls(kind="power", theta=float(theta), mu_a=float(theta))

    @classmethod
    def nonadmissible_power(cls, theta: float) -> "Weight":
        """x**theta with no upper limit on theta (used by the failure experiments)."""
        if theta < 0:
            raise WeightError("theta must be nonnegative")
        return cls(kind="power", theta=float(theta), mu_a=float(theta), admissible=theta < 2.0)

    @classmethod
    def oscillatory(cls, theta: float, alpha: float) -> "Weight":
        if not (0.0 < theta < 2.0 and alpha > 0.0 and theta + 2.0 * alpha < 2.0):
            raise WeightError(f"need theta in (0,2), alpha > 0, theta + 2 alpha < 2; got {theta}, {alpha}")
        w = cls(kind="oscillatory", theta=float(theta), alpha=float(alpha))
        return _finish(w)

    @classmethod
    def tabulated(cls, x, a, aprime=None) -> "Weight":
        x = np.asarray(x, dtype=float)
        a = np.asarray(a, dtype=float)
        if x.ndim != 1 or x.shape != a.shape or x.size < 3:
            raise WeightError("table needs matching 1d x and a columns with >= 3 rows")
        if x[0] != 0.0 or abs(x[-1] - 1.0) > 1e-12 or np.any(np.diff(x) <= 0):
            raise WeightError("table x must increase strictly from 0 to 1")
        if a[0] != 0.0:
            raise WeightError("tabulated weight must satisfy a(0) = 0")
        if np.any(a[1:] <= 0):
            raise WeightError("tabulated weight must be positive on (0, 1]")
        if aprime is None:
            interp = PchipInterpolator(x, a)
        else:
            interp = CubicHermiteSpline(x, a, np.asarray(aprime, dtype=float))
        # first cell: a = a(x1) (x/x1)^m, so the degeneracy exponent at 0 is not forced to an integer
        x1, a1 = x[1], a[1]
        if aprime is not None and aprime[1] > 0:
            m = x1 * float(aprime[1]) / a1
        else:
            m = math.log(a[2] / a1) / math.log(x[2] / x1)
        if m <= 0:
            raise WeightError("tabulated weight must increase away from x = 0")
        w = cls(kind="tabulated", _table=(interp, interp.derivative(), x1, a1, m))
        return _finish(w)

    @classmethod
    def from_csv(cls, path) -> "Weight":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = [float(r["x"]) for r in rows]
        a = [float(r["a"]) for r in rows]
        ap = [float(r["aprime"]) for r in rows] if rows and rows[0].get("aprime") not in (None, "") else None
        return cls.tabulated(x, a, ap)

    @classmethod
    def from_spec(cls, spec: dict) -> "Weight":
        """Build from a config mapping ``{kind, theta, alpha?, table_path?}``."""
        kind = spec.get("kind", "power")
        if kind == "power":
            return cls.power(spec["theta"])
        if kind == "oscillatory":
            return cls.oscillatory(spec["theta"], spec["alpha"])
        if kind == "tabulated":
            return cls.from_csv(spec["table_path"])
        if kind == "nonadmissible":
            return cls.nonadmissible_power(spec["theta"])
        raise WeightError(f"unknown weight kind {kind!r}")

    # -- evaluation -------------------------------------------------------
    @property
    def regime(self) -> str:
        return WEAK if self.mu_a < 1.0 else STRONG

    def a(self, x):
        x = _check_domain(x)
        if self.kind == "power":
            return np.power(x, self.theta) if self.theta > 0 else np.ones_like(x)
        if self.kind == "oscillatory":
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.sin(self.alpha * np.log(x))
                out = np.power(x, self.theta) * (1.0 + s * s)
            return np.where(x > 0, out, 0.0)
        interp, _, x1, a1, m = self._table
        return np.where(x < x1, a1 * np.power(x / x1, m), interp(x))

    def da(self, x):
        x = _check_domain(x)
        if self.kind == "power":
            if self.theta == 0:
                return np.zeros_like(x)
            with np.errstate(divide="ignore"):
                return self.theta * np.power(x, self.theta - 1.0)
        if self.kind == "oscillatory":
            with np.errstate(divide="ignore", invalid="ignore"):
                phi = self.alpha * np.log(x)
                s, c = np.sin(phi), np.cos(phi)
                xt = np.power(x, self.theta - 1.0)
                return self.theta * xt * (1.0 + s * s) + 2.0 * self.alpha * xt * s * c
        _, dinterp, x1, a1, m = self._table
        with np.errstate(divide="ignore", invalid="ignore"):
            head = m * a1 / x1 * np.power(x / x1, m - 1.0)
        return np.where(x < x1, head, dinterp(x))

    def degeneracy_ratio(self, x):
        """x |a'(x)| / a(x) on (0, 1]."""
        x = np.asarray(x, dtype=float)
        return x * np.abs(self.da(x)) / self.a(x)

    def constants(self, beta: float = 0.0) -> "WeightConstants":
        return compute_constants(self, beta)

    def to_spec(self) -> dict:
        d = {"kind": self.kind if self.admissible else "nonadmissible", "theta": self.theta}
        if self.kind == "oscillatory":
            d["alpha"] = self.alpha
        return d


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0 + 1e-14):
        raise WeightError("x must lie in [0, 1]")
    return x


def _finish(w: Weight) -> Weight:
    """Compute mu_a by probing and refining; validate positivity."""
    probe = np.geomspace(2.0**-60, 1.0, _PROBE_POINTS)
    av = w.a(probe)
    if np.any(av <= 0) or not np.all(np.isfinite(av)):
        raise WeightError("weight must be positive on (0, 1]")
    if float(w.a(np.array([0.0]))[0]) != 0.0:
        raise WeightError("weight must vanish at x = 0")
    ratio = w.degeneracy_ratio(probe)
    k = int(np.argmax(ratio))
    lo, hi = probe[max(k - 1, 0)], probe[min(k + 1, probe.size - 1)]
    res = minimize_scalar(
        lambda lx: -float(w.degeneracy_ratio(np.array([math.exp(lx)]))[0]),
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    mu = max(float(ratio[k]), -float(res.fun))
    if mu >= 2.0:
        raise WeightError(f"mu_a = {mu:.6g} >= 2: not admissible")
    a1 = float(w.a(np.array([1.0]))[0])
    return Weight(
        kind=w.kind, theta=w.theta, alpha=w.alpha, mu_a=mu, a_at_1=a1, admissible=True, _table=w._table
    )


def make_weight(kind: str, theta: float = 0.0, alpha: float = 0.0, table_path=None) -> Weight:
    spec = {"kind": kind, "theta": theta, "alpha": alpha, "table_path": table_path}
    return Weight.from_spec(spec)


@dataclass(frozen=True)
class WeightConstants:
    C_a: float
    C_a_prime: float
    T_a: float
    T_bracket: float
    gamma_a: float
    eta_1: float
    eta_2: float
    alpha_a: Optional[float] = None
    C_a_doubleprime: Optional[float] = None
    M_a_beta: Optional[float] = None


def poincare_constant(mu: float, a1: float) -> float:
    return min(4.0, 1.0 / (2.0 - mu)) / a1


def observability_bracket(w: Weight, T: float) -> float:
    """(2 - mu_a) T - 4/min(1, a(1)) - 2 mu_a sqrt(C_a): the factor multiplying E(0)."""
    mu, a1 = w.mu_a, w.a_at_1
    C = poincare_constant(mu, a1)
    return (2.0 - mu) * T - 4.0 / min(1.0, a1) - 2.0 * mu * math.sqrt(C)


def direct_constant(w: Weight, T: float) -> float:
    return 6.0 * T + 1.0 / min(1.0, w.a_at_1)


def compute_constants(w: Weight, beta: float = 0.0) -> WeightConstants:
    if not w.admissible:
        raise WeightError("constants are only defined for admissible weights")
    if beta < 0:
        raise WeightError("beta must be nonnegative")
    mu, a1 = w.mu_a, w.a_at_1
    C = poincare_constant(mu, a1)
    Cp = min(4.0, 2.0 / (2.0 - mu)) / a1
    m = min(1.0, a1)
    T_a = 4.0 / ((2.0 - mu) * m) + 2.0 * mu * math.sqrt(C)
    # zero of the observability bracket; differs from T_a when mu_a > 1
    T_br = (4.0 / m + 2.0 * mu * math.sqrt(C)) / (2.0 - mu)
    gamma = max(2.0 * beta * a1, 1.0 + 2.0 * beta / (2.0 - mu))
    eta1 = 1.0 + 1.5 * a1
    eta2 = beta * (1.0 + beta - mu) + 0.5 * (2.0 * beta - mu / 2.0) ** 2
    if beta == 0:
        return WeightConstants(C, Cp, T_a, T_br, gamma, eta1, eta2)
    alpha = min(1.0 / Cp, beta * a1 / 2.0)
    Cpp = 2.0 * max(1.0 + mu / 4.0, 1.0 / a1 + mu / 4.0 * Cp, mu / (2.0 * beta * a1))
    M = (2.0 / (2.0 - mu)) * (
        2.0 * Cpp
        + eta1 / a1
        + eta2**2 * (1.0 + 1.0 / beta**3) / (2.0 - mu) * (1.0 + 1.0 / (beta * alpha))
        + 2.0 * eta2 / (beta * math.sqrt(alpha))
    )
    return WeightConstants(C, Cp, T_a, T_br, gamma, eta1, eta2, alpha, Cpp, M)
