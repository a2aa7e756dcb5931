"""Bessel functions of the first kind, their first zeros, and the first eigenpair
of -(x^theta y')' = lambda y on (0, 1) with y(1) = 0 for theta in [1, 2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

X_SWITCH = 10.0
_SERIES_RTOL = 1e-18


class SpectralError(ValueError):
    pass


def _series(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    half = 0.5 * x
    term = math.exp(nu * (math.log(x) - math.log(2.0)) - math.lgamma(nu + 1.0))
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if abs(term) < _SERIES_RTOL * abs(total) or k > 500:
            return total


def _miller(nu: float, x: float) -> float:
    """Backward recurrence from a high order, normalised with the Neumann sum
    (x/2)^nu0 = sum_j (nu0 + 2j) Gamma(nu0 + j) / j! J_{nu0+2j}(x)."""
    m = int(math.floor(nu))
    nu0 = nu - m
    top = int(max(x, nu) + 30 + 6 * math.sqrt(max(x, nu))) + 2
    top += top % 2
    jp1, j = 0.0, 1e-300
    want = 0.0
    norm = 0.0
    # k runs over orders nu0 + k, k = top .. 0
    for k in range(top, -1, -1):
        if k == m:
            want = j
        if k % 2 == 0:
            jj = k // 2
            if jj == 0:
                coef = math.exp(math.lgamma(nu0 + 1.0))
            else:
                coef = (nu0 + k) * math.exp(math.lgamma(nu0 + jj) - math.lgamma(jj + 1.0))
            norm += coef * j
        if k > 0:
            jm1 = 2.0 * (nu0 + k) / x * j - jp1
            jp1, j = j, jm1
            if abs(j) > 1e250:
                jp1 *= 1e-250
                j *= 1e-250
                want *= 1e-250
                norm *= 1e-250
    return want * math.exp(nu0 * math.log(0.5 * x)) / norm


def bessel_j(nu: float, x):
    """J_nu(x) for nu >= 0, x >= 0 (scalar or array)."""
    if not (nu >= 0.0 and math.isfinite(nu)):
        raise SpectralError("order must be finite and nonnegative")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise SpectralError("x must be nonnegative")
    flat = [(_series(nu, v) if v <= X_SWITCH else _miller(nu, v)) for v in xs.ravel()]
    out = np.array(flat).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def bessel_j_prime(nu: float, x):
    if nu >= 1.0:
        return 0.5 * (bessel_j(nu - 1.0, x) - bessel_j(nu + 1.0, x))
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = nu / xs * bessel_j(nu, xs) - bessel_j(nu + 1.0, xs)
    if nu == 0.0:
        out = -bessel_j(1.0, xs)
    return float(out) if np.ndim(out) == 0 else out


def first_bessel_zero(nu: float, step: float = 0.5, xtol: float = 1e-14) -> float:
    """Smallest positive zero of J_nu: march up from nu + 1 until the sign flips, then Brent."""
    if not nu >= 0.0:
        raise SpectralError("order must be nonnegative")
    lo = nu + 1.0
    flo = bessel_j(nu, lo)
    while lo < nu + 20.0:
        hi = lo + step
        fhi = bessel_j(nu, hi)
        if flo == 0.0:
            return lo
        if flo * fhi < 0:
            return brentq(lambda t: bessel_j(nu, t), lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
        lo, flo = hi, fhi
    raise SpectralError(f"no sign change of J_{nu} on [nu+1, nu+20]")


@dataclass(frozen=True)
class EigenPair:
    theta: float
    nu_theta: float
    kappa_theta: float
    j_nu: float
    lambda_theta: float
    norm_factor: float

    @property
    def omega(self) -> float:
        return math.sqrt(self.lambda_theta)

    def eigenfunction(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0) or np.any(x > 1.0 + 1e-14):
            raise SpectralError("eigenfunction samples live on (0, 1]")
        s = np.power(x, self.kappa_theta)
        return self.norm_factor * np.power(x, 0.5 * (1.0 - self.theta)) * bessel_j(self.nu_theta, self.j_nu * s)

    def slope_at_1(self) -> float:
        """y'(1) = sqrt(2 kappa) kappa j J'(j) / |J'(j)|."""
        return -math.sqrt(2.0 * self.kappa_theta) * self.kappa_theta * self.j_nu

    def to_dict(self) -> dict:
        return {"theta": self.theta, "nu": self.nu_theta, "kappa": self.kappa_theta,
                "j_nu": self.j_nu, "lambda": self.lambda_theta}


def first_eigenpair(theta: float) -> EigenPair:
    if not 1.0 <= theta < 2.0:
        raise SpectralError("eigenpair formula needs theta in [1, 2)")
    nu = (theta - 1.0) / (2.0 - theta)
    kappa = (2.0 - theta) / 2.0
    j = first_bessel_zero(nu)
    jp = bessel_j_prime(nu, j)
    # J'_nu(j_nu) < 0 at the first zero, hence the sign in slope_at_1
    return EigenPair(theta, nu, kappa, j, kappa * kappa * j * j, math.sqrt(2.0 * kappa) / abs(jp))


def eigen_quotient(theta: float, T: float, phase: float = 0.0) -> float:
    """Closed form of a(1) int_0^T u_x(t,1)^2 dt / E(0) for u = sin(omega t + phase) y."""
    ep = first_eigenpair(theta)
    w, k = ep.omega, ep.kappa_theta
    return 2.0 * T * k * (1.0 - (math.sin(2 * w * T + 2 * phase) - math.sin(2 * phase)) / (2 * w * T))


def optimal_phase(theta: float, T: float) -> float:
    """Phase minimising the eigen quotient on [0, T]."""
    w = first_eigenpair(theta).omega
    sgn = 1.0 if math.sin(w * T) >= 0 else -1.0
    return 0.5 * (-w * T + (0.0 if sgn > 0 else math.pi))


def eigen_solution(theta: float, T: float, x, phase: float = 0.0):
    """Initial data of u = sin(omega t + phase) y_theta(x) sampled at nodes x, the
    closed-form boundary trace t -> u_x(t, 1), and the closed-form quotient.

    Node x = 0 receives the limit value y(0+) = lim of the formula (finite since
    the singular power cancels against J_nu's leading order)."""
    ep = first_eigenpair(theta)
    x = np.asarray(x, dtype=float)
    y = np.empty_like(x)
    pos = x > 0
    y[pos] = ep.eigenfunction(x[pos])
    if np.any(~pos):
        # J_nu(j s) ~ (j s / 2)^nu / Gamma(nu + 1) and x^{(1-theta)/2} s^nu = 1
        y[~pos] = ep.norm_factor * (0.5 * ep.j_nu) ** ep.nu_theta / math.gamma(ep.nu_theta + 1.0)
    y[-1] = 0.0
    w = ep.omega
    u0 = math.sin(phase) * y
    u1 = w * math.cos(phase) * y
    d1 = ep.slope_at_1()

    def trace(t):
        return np.sin(w * np.asarray(t, dtype=float) + phase) * d1

    return u0, u1, trace, eigen_quotient(theta, T, phase)
