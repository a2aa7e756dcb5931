"""Compiled inner loops for the implicit midpoint integrator."""

import math

import numpy as np
from numba import njit

LAW_NONE = 0
LAW_LINEAR = 1
LAW_POLY = 2
LAW_POLYLOG = 3
LAW_EXPINVSQ = 4
LAW_EXPLOGPOW = 5

FLUX_DIRICHLET = 0
FLUX_DAMPED = 1
FLUX_NONE = 2


@njit(cache=True)
def law_g(law, p1, p2, s):
    """Growth envelope g(s) for 0 <= s."""
    if s <= 0.0:
        return 0.0
    if law == LAW_LINEAR:
        return p1 * s
    if law == LAW_POLY:
        return s**p1
    if law == LAW_POLYLOG:
        return s**p1 * math.log(1.0 / s) ** p2
    if law == LAW_EXPINVSQ:
        if s < 0.02:
            return 0.0
        return math.exp(-1.0 / (s * s))
    if law == LAW_EXPLOGPOW:
        lg = math.log(1.0 / s)
        if lg <= 0.0:
            return 1.0
        return math.exp(-(lg**p1))
    return 0.0


@njit(cache=True)
def law_gp(law, p1, p2, s):
    if s <= 0.0:
        if law == LAW_LINEAR:
            return p1
        if law == LAW_POLY and p1 == 1.0:
            return 1.0
        return 0.0
    if law == LAW_LINEAR:
        return p1
    if law == LAW_POLY:
        return p1 * s ** (p1 - 1.0)
    if law == LAW_POLYLOG:
        lg = math.log(1.0 / s)
        return s ** (p1 - 1.0) * lg ** (p2 - 1.0) * (p1 * lg - p2)
    if law == LAW_EXPINVSQ:
        if s < 0.02:
            return 0.0
        return math.exp(-1.0 / (s * s)) * 2.0 / (s * s * s)
    if law == LAW_EXPLOGPOW:
        lg = math.log(1.0 / s)
        if lg <= 0.0:
            return 0.0
        return math.exp(-(lg**p1)) * p1 * lg ** (p1 - 1.0) / s
    return 0.0


@njit(cache=True)
def rho(law, p1, p2, s0, gs0, s):
    """Odd feedback: g on |s| <= s0, linear continuation g(s0) s / s0 beyond."""
    a = abs(s)
    if a <= s0:
        r = law_g(law, p1, p2, a)
    else:
        r = gs0 * a / s0
    return r if s >= 0.0 else -r


@njit(cache=True)
def rho_prime(law, p1, p2, s0, gs0, s):
    a = abs(s)
    if a <= s0:
        return law_gp(law, p1, p2, a)
    return gs0 / s0


@njit(cache=True)
def thomas_factor(diag, off):
    m = diag.size
    cp = np.empty(m)
    den = np.empty(m)
    den[0] = diag[0]
    for i in range(1, m):
        cp[i - 1] = off[i - 1] / den[i - 1]
        den[i] = diag[i] - off[i - 1] * cp[i - 1]
    cp[m - 1] = 0.0
    return cp, den


@njit(cache=True)
def thomas_solve(off, cp, den, rhs, out):
    m = rhs.size
    out[0] = rhs[0] / den[0]
    for i in range(1, m):
        out[i] = (rhs[i] - off[i - 1] * out[i - 1]) / den[i]
    for i in range(m - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True)
def energy(mass, kd, ko, u, v):
    """1/2 v'Mv + 1/2 u'Ku with u'Ku written as a sum of squares (no cancellation)."""
    m = u.size
    e = 0.0
    for i in range(m):
        r = kd[i]
        if i > 0:
            r += ko[i - 1]
        if i < m - 1:
            r += ko[i]
        e += mass[i] * v[i] * v[i] + r * u[i] * u[i]
    for i in range(m - 1):
        d = u[i + 1] - u[i]
        e -= ko[i] * d * d
    return 0.5 * e


@njit(cache=True)
def _scalar_root(law, p1, p2, s0, gs0, c, r):
    """Solve s + c rho(s) = r (monotone); Newton with bisection safeguard."""
    if r == 0.0:
        return 0.0
    lo, hi = (0.0, r) if r > 0 else (r, 0.0)
    s = r / (1.0 + c * rho_prime(law, p1, p2, s0, gs0, r))
    if s < lo or s > hi:
        s = 0.5 * (lo + hi)
    tol = 1e-13 * abs(r)
    for _ in range(200):
        f = s + c * rho(law, p1, p2, s0, gs0, s) - r
        if f == 0.0:
            return s
        if f > 0:
            hi = s
        else:
            lo = s
        d = 1.0 + c * rho_prime(law, p1, p2, s0, gs0, s)
        sn = s - f / d
        if sn <= lo or sn >= hi:
            sn = 0.5 * (lo + hi)
        if abs(sn - s) <= tol or hi - lo <= tol:
            return sn
        s = sn
    return s


@njit(cache=True)
def march(mass, kd, ko, soff, cp, den, u, v, dt, nsteps, stride,
          law, p1, p2, s0, gs0, a1, beta, z, ctrl, kc, flux_mode, fc,
          out_t, out_e, out_ub, out_vb, out_fl, out_cum,
          mid_1, mid_2, snap_stride, snap_u, snap_v):
    """Implicit midpoint steps on the free unknowns.

    S V = 2 M v - dt K u [- dt kc f_{k+1/2} e_last] [- dt a1 rho(V_last) e_last]
    u <- u + dt V,  v <- 2 V - v.  Returns the number of recorded samples.
    """
    m = u.size
    rhs = np.empty(m)
    V = np.empty(m)
    t = 0.0

    def flux_of(uu, vv):
        if flux_mode == FLUX_DIRICHLET:
            return fc[1] * uu[m - 1] + fc[2] * uu[m - 2]
        if flux_mode == FLUX_DAMPED:
            return -rho(law, p1, p2, s0, gs0, vv[m - 1]) - beta * uu[m - 1]
        return 0.0

    fl = flux_of(u, v)
    cum = 0.0
    rec = 0
    out_t[0] = 0.0
    out_e[0] = energy(mass, kd, ko, u, v)
    out_ub[0] = u[m - 1]
    out_vb[0] = v[m - 1]
    out_fl[0] = fl
    out_cum[0] = 0.0
    rec = 1
    if snap_stride > 0:
        snap_u[0, :] = u
        snap_v[0, :] = v
    nonlinear = law >= LAW_POLY
    for k in range(nsteps):
        for i in range(m):
            kv = kd[i] * u[i]
            if i > 0:
                kv += ko[i - 1] * u[i - 1]
            if i < m - 1:
                kv += ko[i] * u[i + 1]
            rhs[i] = 2.0 * mass[i] * v[i] - dt * kv
        if ctrl.size > 0:
            rhs[m - 1] -= dt * kc * ctrl[k]
        thomas_solve(soff, cp, den, rhs, V)
        if nonlinear:
            c = dt * a1 * z[m - 1]
            sb = _scalar_root(law, p1, p2, s0, gs0, c, V[m - 1])
            r = dt * a1 * rho(law, p1, p2, s0, gs0, sb)
            for i in range(m):
                V[i] -= r * z[i]
        if mid_1.size > 0:
            mid_1[k] = u[m - 1] + 0.5 * dt * V[m - 1]
            mid_2[k] = u[m - 2] + 0.5 * dt * V[m - 2]
        for i in range(m):
            u[i] += dt * V[i]
            v[i] = 2.0 * V[i] - v[i]
        t = (k + 1) * dt
        fn = flux_of(u, v)
        cum += 0.5 * dt * (fl * fl + fn * fn)
        fl = fn
        if (k + 1) % stride == 0 or k == nsteps - 1:
            out_t[rec] = t
            out_e[rec] = energy(mass, kd, ko, u, v)
            out_ub[rec] = u[m - 1]
            out_vb[rec] = v[m - 1]
            out_fl[rec] = fl
            out_cum[rec] = cum
            rec += 1
        if snap_stride > 0 and (k + 1) % snap_stride == 0:
            j = (k + 1) // snap_stride
            snap_u[j, :] = u
            snap_v[j, :] = v
    return rec


@njit(cache=True)
def leapfrog(mass, kd, ko, u, v, dt, nsteps, fc, out_e, out_fl):
    """Explicit central differences (conservative Dirichlet case only), for cross-checks."""
    m = u.size
    acc = np.empty(m)

    def accel(uu, out):
        for i in range(m):
            kv = kd[i] * uu[i]
            if i > 0:
                kv += ko[i - 1] * uu[i - 1]
            if i < m - 1:
                kv += ko[i] * uu[i + 1]
            out[i] = -kv / mass[i]

    accel(u, acc)
    out_e[0] = energy(mass, kd, ko, u, v)
    out_fl[0] = fc[1] * u[m - 1] + fc[2] * u[m - 2]
    for k in range(nsteps):
        for i in range(m):
            v[i] += 0.5 * dt * acc[i]
            u[i] += dt * v[i]
        accel(u, acc)
        for i in range(m):
            v[i] += 0.5 * dt * acc[i]
        out_e[k + 1] = energy(mass, kd, ko, u, v)
        out_fl[k + 1] = fc[1] * u[m - 1] + fc[2] * u[m - 2]


# -- convexity machinery ---------------------------------------------------

@njit(cache=True)
def h_of(law, p1, p2, x):
    """H(x) = sqrt(x) g(sqrt(x))."""
    if x <= 0.0:
        return 0.0
    s = math.sqrt(x)
    return s * law_g(law, p1, p2, s)


@njit(cache=True)
def hp_of(law, p1, p2, x):
    """H'(x) = (g(s) + s g'(s)) / (2 s), s = sqrt(x)."""
    if x <= 0.0:
        if law == LAW_LINEAR:
            return p1
        return 0.0
    s = math.sqrt(x)
    return (law_g(law, p1, p2, s) + s * law_gp(law, p1, p2, s)) / (2.0 * s)


@njit(cache=True)
def h_array(law, p1, p2, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = h_of(law, p1, p2, x[i])
    return out


@njit(cache=True)
def hp_array(law, p1, p2, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = hp_of(law, p1, p2, x[i])
    return out


@njit(cache=True)
def conjugate_refine(law, p1, p2, y, lo, hi, iters):
    """Golden-section maximisation of x y - H(x) on [lo, hi]; returns (value, argmax)."""
    out_v = np.empty(y.size)
    out_x = np.empty(y.size)
    r = 0.5 * (math.sqrt(5.0) - 1.0)
    for i in range(y.size):
        a = lo[i]
        b = hi[i]
        yi = y[i]
        c = b - r * (b - a)
        d = a + r * (b - a)
        fc = c * yi - h_of(law, p1, p2, c)
        fd = d * yi - h_of(law, p1, p2, d)
        for _ in range(iters):
            if fc >= fd:
                b = d
                d = c
                fd = fc
                c = b - r * (b - a)
                fc = c * yi - h_of(law, p1, p2, c)
            else:
                a = c
                c = d
                fc = fd
                d = a + r * (b - a)
                fd = d * yi - h_of(law, p1, p2, d)
        best_x = c if fc >= fd else d
        best = max(fc, fd)
        # the endpoints can win when the maximiser sits on the bracket edge
        fa = lo[i] * yi - h_of(law, p1, p2, lo[i])
        fb = hi[i] * yi - h_of(law, p1, p2, hi[i])
        if fa > best:
            best = fa
            best_x = lo[i]
        if fb > best:
            best = fb
            best_x = hi[i]
        out_v[i] = best
        out_x[i] = best_x
    return out_v, out_x


@njit(cache=True)
def hprime_inverse(law, p1, p2, y, xmax):
    """Bisection in log x for H'(x) = y on (0, xmax] (H' increasing); clamps to xmax."""
    out = np.empty(y.size)
    for i in range(y.size):
        yi = y[i]
        if yi <= 0.0:
            out[i] = 0.0
            continue
        if yi >= hp_of(law, p1, p2, xmax):
            out[i] = xmax
            continue
        a = math.log(1e-300)
        b = math.log(xmax)
        if hp_of(law, p1, p2, 1e-300) >= yi:
            out[i] = 1e-300
            continue
        for _ in range(200):
            m = 0.5 * (a + b)
            if hp_of(law, p1, p2, math.exp(m)) < yi:
                a = m
            else:
                b = m
            if b - a <= 1e-16:
                break
        out[i] = math.exp(0.5 * (a + b))
    return out
