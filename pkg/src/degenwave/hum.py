"""Exact boundary controllability at x = 1 by the Hilbert Uniqueness Method.

Everything is fully discrete and uses one time integrator, so the discrete
transposition identity holds exactly. With Phi^k = (v^k, w^k)_M - (y^k, w_t^k)_M,
a controlled forward run y (node n driven by f_{k+1/2}) and a homogeneous
adjoint run w satisfy

    Phi^N - Phi^0 = -dt sum_k f_{k+1/2} F(w^{k+1/2}),   F(w) = a_{n-1/2} (w_n - w_{n-1}) / h,

where F(w) is a second-order approximation of a(1) w_x(t, 1). Choosing the
control f = F(w)/a(1), i.e. f ~ w_x(t, 1), the map W_T -> (final state of y) is
the Gram operator, symmetric positive definite in the energy inner product
<W, W~> = (w0' K w~0 + w1' M w~1) / 2.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as kern
from .discretization import Dirichlet, Grid
from .weights import Weight, observability_bracket


@dataclass
class HumProblem:
    weight: Weight
    T: float
    y0: np.ndarray  # full node arrays (n + 1)
    y1: np.ndarray
    n: int = 200
    dt: Optional[float] = None
    require_observable_time: bool = True

    def __post_init__(self):
        if self.dt is None:
            self.dt = 0.5 / self.n
        T_a = self.weight.constants().T_a
        if self.require_observable_time and self.T <= T_a:
            raise ValueError(f"T = {self.T} must exceed the observability time T_a = {T_a:.6g}")
        self.y0 = np.asarray(self.y0, dtype=float)
        self.y1 = np.asarray(self.y1, dtype=float)
        if self.y0.shape != (self.n + 1,) or self.y1.shape != (self.n + 1,):
            raise ValueError("initial data must be sampled on the n + 1 nodes")


@dataclass
class HumSolution:
    times: np.ndarray  # half-step times t_{k+1/2}
    f: np.ndarray
    cg_residuals: list
    iterations: int
    final_state_norm: float
    initial_norm: float
    min_ritz: Optional[float]
    converged: bool
    W_T: tuple = field(repr=False)
    elapsed: float = 0.0

    @property
    def relative_final_norm(self) -> float:
        return self.final_state_norm / self.initial_norm if self.initial_norm > 0 else 0.0

    def control_norm(self, dt: float) -> float:
        return math.sqrt(dt * float(np.sum(self.f**2)))

    def diagnostics(self) -> dict:
        return {"iterations": self.iterations, "residuals": list(map(float, self.cg_residuals)),
                "final_state_norm": self.final_state_norm, "initial_norm": self.initial_norm,
                "relative_final_norm": self.relative_final_norm, "min_ritz": self.min_ritz,
                "converged": self.converged, "elapsed_s": self.elapsed}


class HumOperator:
    """Forward/backward solvers and the Gram operator for one (weight, grid, T)."""

    def __init__(self, weight: Weight, T: float, n: int = 200, dt: Optional[float] = None):
        self.grid = Grid(weight, n)
        self.T = T
        self.dt = dt if dt is not None else 0.5 / n
        self.N = int(round(T / self.dt))
        bc = Dirichlet()
        self.sl = self.grid.free_slice(bc)
        d, o = self.grid.stiffness_bands()
        lo, hi = self.sl.start, self.sl.stop
        self.mass = self.grid.mass()[lo:hi].copy()
        self.kd = d[lo:hi].copy()
        self.ko = o[lo:hi - 1].copy()
        self.kc = float(o[hi - 1])  # K entry coupling node n-1 to the controlled node n
        self.a1 = weight.a_at_1
        self.m = hi - lo
        dt_ = self.dt
        self.soff = 0.5 * dt_ * dt_ * self.ko
        self.cp, self.den = kern.thomas_factor(2.0 * self.mass + 0.5 * dt_ * dt_ * self.kd, self.soff)
        self.kcp, self.kden = kern.thomas_factor(self.kd.copy(), self.ko)
        self._rec = [np.zeros(3) for _ in range(6)]
        fc = self.grid.flux_coefficients()
        self.fc = np.array(fc)

    # -- linear algebra helpers ------------------------------------------
    def k_solve(self, b):
        out = np.empty_like(b)
        kern.thomas_solve(self.ko, self.kcp, self.kden, np.ascontiguousarray(b), out)
        return out

    def k_apply(self, u):
        out = self.kd * u
        out[:-1] += self.ko * u[1:]
        out[1:] += self.ko * u[:-1]
        return out

    def inner(self, W, Z) -> float:
        return 0.5 * (float(W[0] @ self.k_apply(Z[0])) + float(W[1] @ (self.mass * Z[1])))

    def state_norm(self, y, v) -> float:
        """sqrt(||y||_{L2}^2 + ||v||_{H^-1}^2) with ||v||_{-1}^2 = (Mv)' K^{-1} (Mv)."""
        mv = self.mass * v
        return math.sqrt(float(y @ (self.mass * y)) + float(mv @ self.k_solve(mv)))

    def restrict(self, full):
        return np.asarray(full, dtype=float)[self.sl].copy()

    # -- solvers -----------------------------------------------------------
    def _march(self, u, v, ctrl=None, record_mid=False):
        n = self.N
        mid1 = np.zeros(n if record_mid else 0)
        mid2 = np.zeros(n if record_mid else 0)
        nrec = 3
        outs = [np.zeros(nrec) for _ in range(6)]
        c = np.zeros(0) if ctrl is None else np.ascontiguousarray(ctrl, dtype=float)
        empty = np.zeros((0, self.m))
        kern.march(self.mass, self.kd, self.ko, self.soff, self.cp, self.den, u, v, self.dt, n, n,
                   kern.LAW_NONE, 0.0, 0.0, 1.0, 0.0, self.a1, 0.0, np.zeros(0), c, self.kc,
                   kern.FLUX_NONE, self.fc, *outs, mid1, mid2, 0, empty, empty)
        return u, v, mid1, mid2

    def backward(self, W):
        """Adjoint run from final data W = (w(T), w_t(T)); returns (w(0), w_t(0), mid values)
        with mid arrays in forward time order (index k for the interval [t_k, t_{k+1}])."""
        u = W[0].copy()
        v = -W[1].copy()
        u, v, m1, m2 = self._march(u, v, record_mid=True)
        return u, -v, m1[::-1].copy(), m2[::-1].copy()

    def trace_F(self, mid1) -> np.ndarray:
        """F(w^{k+1/2}) = a_{n-1/2} (0 - w_{n-1}) / h = kc * w_{n-1}."""
        return self.kc * mid1

    def control_of(self, W) -> np.ndarray:
        _, _, m1, _ = self.backward(W)
        return self.trace_F(m1) / self.a1

    def forward(self, y0, y1, f=None):
        """Controlled run; returns (y(T), y_t(T)) on the free nodes."""
        ctrl = np.zeros(self.N) if f is None else f
        y, v, _, _ = self._march(y0.copy(), y1.copy(), ctrl=ctrl)
        return y, v

    def riesz(self, y, v, sign=1.0):
        """Energy-inner-product representative of W~ -> sign((y, w~1)_M - (v, w~0)_M)."""
        return (sign * -2.0 * self.k_solve(self.mass * v), sign * 2.0 * y)

    def gram(self, W):
        f = self.control_of(W)
        y, v = self.forward(np.zeros(self.m), np.zeros(self.m), f)
        return self.riesz(y, v)

    def rhs(self, y0, y1):
        y, v = self.forward(y0, y1)
        return self.riesz(y, v, sign=-1.0)


def _axpy(a, X, Y):
    return (Y[0] + a * X[0], Y[1] + a * X[1])


def _scale(a, X):
    return (a * X[0], a * X[1])


def conjugate_gradient(op: HumOperator, b, tol: float = 1e-8, max_iter: int = 500, method: str = "cr"):
    """Krylov solve of Gram W = b in the energy inner product.

    ``method='cg'`` is plain conjugate gradients; ``method='cr'`` is the conjugate
    residual variant (CG in the inner product <x, G y>), whose residual, which here
    equals the norm of the final state, decreases monotonically. Returns
    (W, relative residual history, smallest Ritz value, converged).
    """
    x = (np.zeros(op.m), np.zeros(op.m))
    r = (b[0].copy(), b[1].copy())
    bnorm = math.sqrt(op.inner(b, b))
    if bnorm == 0:
        return x, [0.0], None, True
    res = [1.0]
    alphas, betas = [], []
    converged = False
    p = (r[0].copy(), r[1].copy())
    if method == "cg":
        rr = op.inner(r, r)
        for _ in range(max_iter):
            Ap = op.gram(p)
            alpha = rr / op.inner(p, Ap)
            x = _axpy(alpha, p, x)
            r = _axpy(-alpha, Ap, r)
            rr_new = op.inner(r, r)
            alphas.append(alpha)
            res.append(math.sqrt(rr_new) / bnorm)
            if res[-1] <= tol:
                converged = True
                break
            betas.append(rr_new / rr)
            p = _axpy(betas[-1], p, r)
            rr = rr_new
    elif method == "cr":
        Ar = op.gram(r)
        Ap = Ar
        rAr = op.inner(r, Ar)
        for _ in range(max_iter):
            alpha = rAr / op.inner(Ap, Ap)
            x = _axpy(alpha, p, x)
            r = _axpy(-alpha, Ap, r)
            alphas.append(alpha)
            res.append(math.sqrt(op.inner(r, r)) / bnorm)
            if res[-1] <= tol:
                converged = True
                break
            Ar = op.gram(r)
            rAr_new = op.inner(r, Ar)
            betas.append(rAr_new / rAr)
            rAr = rAr_new
            p = _axpy(betas[-1], p, r)
            Ap = _axpy(betas[-1], Ap, Ar)
    else:
        raise ValueError(f"unknown Krylov method {method!r}")
    return x, res, _min_ritz(alphas, betas), converged


def _min_ritz(alphas, betas) -> Optional[float]:
    """Smallest eigenvalue of the Lanczos tridiagonal built from the CG coefficients."""
    k = len(alphas)
    if k == 0:
        return None
    diag = np.empty(k)
    off = np.empty(max(k - 1, 0))
    for j in range(k):
        diag[j] = 1.0 / alphas[j] + (betas[j - 1] / alphas[j - 1] if j > 0 else 0.0)
        if j < k - 1:
            off[j] = math.sqrt(betas[j]) / alphas[j]
    from scipy.linalg import eigvalsh_tridiagonal

    return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def solve_hum(p: HumProblem, tol: float = 1e-8, max_iter: int = 500, method: str = "cr") -> HumSolution:
    t0 = time.perf_counter()
    op = HumOperator(p.weight, p.T, p.n, p.dt)
    y0, y1 = op.restrict(p.y0), op.restrict(p.y1)
    init = op.state_norm(y0, y1)
    times = (np.arange(op.N) + 0.5) * op.dt
    if init == 0:
        return HumSolution(times, np.zeros(op.N), [0.0], 0, 0.0, 0.0, None, True,
                           (np.zeros(op.m), np.zeros(op.m)), time.perf_counter() - t0)
    b = op.rhs(y0, y1)
    W, res, ritz, conv = conjugate_gradient(op, b, tol, max_iter, method)
    f = op.control_of(W)
    yT, vT = op.forward(y0, y1, f)
    final = op.state_norm(yT, vT)
    return HumSolution(times, f, res, len(res) - 1, final, init, ritz, conv, W, time.perf_counter() - t0)


def lower_bracket(w: Weight, T: float) -> float:
    return observability_bracket(w, T)


def modal_gram_min_eigenvalue(op: HumOperator, fraction: float = 1.0) -> float:
    """Smallest eigenvalue of the Gram operator restricted to the lowest discrete modes.

    The modes phi_j solve K phi = lambda M phi; the subspace keeps the first
    ``fraction`` of them in both the displacement and the velocity slot."""
    from scipy.linalg import eigh, eigh_tridiagonal

    sm = np.sqrt(op.mass)
    lam, Q = eigh_tridiagonal(op.kd / op.mass, op.ko / (sm[:-1] * sm[1:]))
    r = max(1, int(round(fraction * op.m)))
    phi = (Q[:, :r].T / sm).T
    zero = np.zeros(op.m)
    basis = [(phi[:, j], zero) for j in range(r)] + [(zero, phi[:, j]) for j in range(r)]
    images = [op.gram(B) for B in basis]
    G = np.array([[op.inner(Bi, Ij) for Ij in images] for Bi in basis])
    G = 0.5 * (G + G.T)
    Bm = np.diag([op.inner(B, B) for B in basis])
    return float(eigh(G, Bm, eigvals_only=True)[0])


@dataclass
class TranspositionReport:
    residuals: list
    max_residual: float
    mode: str


def verify_transposition_identity(p: HumProblem, f, samples: int = 3, seed: int = 0,
                                  mode: str = "flux") -> TranspositionReport:
    """Both sides of

        (y_t(T), w_T0) - (y(T), w_T1) = (y1, w(0)) - (y0, w_t(0)) - a(1) int f w_x(t, 1) dt

    for random smooth adjoint data. ``mode='flux'`` uses a one-sided second-order
    difference of w at x = 1 (residual O(h^2)); ``mode='exact'`` uses the scheme's own
    boundary flux (residual at round-off).
    """
    op = HumOperator(p.weight, p.T, p.n, p.dt)
    y0, y1 = op.restrict(p.y0), op.restrict(p.y1)
    f = np.asarray(f, dtype=float)
    yT, vT = op.forward(y0, y1, f)
    rng = np.random.default_rng(seed)
    x = op.grid.nodes[op.sl]
    out = []
    for _ in range(samples):
        c0, c1 = rng.standard_normal(4), rng.standard_normal(4)
        w0 = sum(c0[k] * np.sin((k + 1) * math.pi * x) / (k + 1) ** 2 for k in range(4))
        w1 = sum(c1[k] * np.sin((k + 1) * math.pi * x) / (k + 1) for k in range(4))
        if op.grid.regime != "weak":
            w0 = sum(c0[k] * np.cos((k + 0.5) * math.pi * x) / (k + 1) ** 2 for k in range(4))
            w1 = sum(c1[k] * np.cos((k + 0.5) * math.pi * x) / (k + 1) for k in range(4))
        wz, wtz, m1, m2 = op.backward((w0, w1))
        if mode == "exact":
            flux_term = op.dt * float(np.sum(f * op.trace_F(m1)))
        else:
            wx = op.fc[1] * m1 + op.fc[2] * m2
            flux_term = op.dt * op.a1 * float(np.sum(f * wx))
        lhs = float(vT @ (op.mass * w0) - yT @ (op.mass * w1))
        init = float(y1 @ (op.mass * wz) - y0 @ (op.mass * wtz))
        rhs = init - flux_term
        scale = max(abs(lhs), abs(init), abs(flux_term))
        out.append(abs(lhs - rhs) / scale if scale > 0 else 0.0)
    return TranspositionReport(out, max(out) if out else 0.0, mode)


@dataclass
class OptimalityReport:
    hum_norm: float
    perturbed_norms: list
    perturbed_final_norms: list

    @property
    def hum_is_minimal(self) -> bool:
        return all(pn >= 0.95 * self.hum_norm for pn in self.perturbed_norms)


def optimality_check(p: HumProblem, sol: HumSolution, count: int = 3, eps: float = 0.5,
                     seed: int = 0, tol: float = 1e-8) -> OptimalityReport:
    """Compare ||f|| with ||f + eps d|| for perturbations d that leave the final state unchanged.

    d = r - F(X)/a(1), where r is random and X solves Gram X = (final state of r)."""
    op = HumOperator(p.weight, p.T, p.n, p.dt)
    rng = np.random.default_rng(seed)
    y0, y1 = op.restrict(p.y0), op.restrict(p.y1)
    t = (np.arange(op.N) + 0.5) * op.dt
    norms, finals = [], []
    for _ in range(count):
        c = rng.standard_normal(6)
        r = sum(c[k] * np.sin((k + 1) * math.pi * t / p.T) for k in range(6))
        yr, vr = op.forward(np.zeros(op.m), np.zeros(op.m), r)
        X, *_ = conjugate_gradient(op, op.riesz(yr, vr), tol)
        d = r - op.control_of(X)
        g = sol.f + eps * d
        yT, vT = op.forward(y0, y1, g)
        norms.append(math.sqrt(op.dt * float(np.sum(g * g))))
        finals.append(op.state_norm(yT, vT))
    return OptimalityReport(sol.control_norm(op.dt), norms, finals)
