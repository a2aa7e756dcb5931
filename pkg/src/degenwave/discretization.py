"""Grid, flux-form degenerate operator, discrete energies and boundary traces.

Unknowns live at nodes x_i = (i/n)^q (q = 1 by default). The mass matrix is the
lumped (trapezoid) diagonal, the stiffness matrix is assembled from cell
conductances a_i/h_i, so that -M^{-1} K is the flux-form second difference at
interior nodes. In the weak regime node 0 is pinned to zero and a_i is the
harmonic cell mean h_i / int_cell dx/a, which is exact for the constant-flux
profile u ~ x^{1-theta} that solutions develop at the degenerate end; in the
strong regime 1/a is not integrable at 0, a_i = a(x_{i+1/2}), and node 0 is a
free unknown whose left flux is zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .weights import STRONG, WEAK, Weight


@dataclass(frozen=True)
class Dirichlet:
    pass


@dataclass(frozen=True)
class LinearDamped:
    beta: float = 1.0


@dataclass(frozen=True)
class NonlinearDamped:
    beta: float
    law: "object"  # dynamics.FeedbackLaw


def is_damped(bc) -> bool:
    return isinstance(bc, (LinearDamped, NonlinearDamped))


@dataclass(frozen=True)
class Grid:
    """Nodes x_i = (i/n)^grading; grading = 1 is the uniform grid.

    ``averaging`` picks the cell coefficient: ``auto`` (harmonic in the weak regime,
    midpoint in the strong one), ``harmonic`` or ``midpoint``."""

    weight: Weight
    n: int
    grading: float = 1.0
    averaging: str = "auto"
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    widths: np.ndarray = field(init=False, repr=False, compare=False)
    mid: np.ndarray = field(init=False, repr=False, compare=False)
    a_mid: np.ndarray = field(init=False, repr=False, compare=False)
    a_cell: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 cells")
        if self.grading < 1.0:
            raise ValueError("grading exponent must be >= 1")
        s = np.arange(self.n + 1) / self.n
        x = s if self.grading == 1.0 else s**self.grading
        x[-1] = 1.0
        xm = 0.5 * (x[1:] + x[:-1])
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "widths", np.diff(x))
        object.__setattr__(self, "mid", xm)
        object.__setattr__(self, "a_mid", np.asarray(self.weight.a(xm), dtype=float))
        mode = self.averaging
        if mode == "auto":
            mode = "harmonic" if self.weight.regime == WEAK else "midpoint"
        if mode == "harmonic":
            if self.weight.regime == STRONG:
                raise ValueError("harmonic averaging needs 1/a integrable at 0 (weak regime)")
            cell = self.widths / inverse_a_integrals(self.weight, x)
        elif mode == "midpoint":
            cell = self.a_mid
        else:
            raise ValueError(f"unknown averaging {self.averaging!r}")
        object.__setattr__(self, "a_cell", cell)
        object.__setattr__(self, "_harmonic", mode == "harmonic")

    @property
    def h(self) -> float:
        """Nominal spacing 1/n (the actual spacing when grading = 1)."""
        return 1.0 / self.n

    @property
    def uniform(self) -> bool:
        return self.grading == 1.0

    @property
    def regime(self) -> str:
        return self.weight.regime

    @property
    def a1(self) -> float:
        return self.weight.a_at_1

    def mass(self) -> np.ndarray:
        m = np.zeros(self.n + 1)
        m[:-1] += 0.5 * self.widths
        m[1:] += 0.5 * self.widths
        return m

    def stiffness_bands(self):
        """Diagonal and off-diagonal of K on all n+1 nodes (no boundary rows removed)."""
        c = self.a_cell / self.widths
        d = np.zeros(self.n + 1)
        d[:-1] += c
        d[1:] += c
        return d, -c

    def cell_weights(self):
        """Quadrature weights (w_pot, w_mixed, w_x) with, per cell and ux = (u_{i+1} - u_i)/h_i,

            int a u_x^2 ~ w_pot ux^2,  int (a - x a') u_x^2 ~ w_mixed ux^2,  int x u_x ~ w_x ux.

        With harmonic averaging the flux a u_x = a_cell ux is taken constant on the cell, so the
        weights are exact for that profile: int (a - x a')/a^2 = [x/a] and int x/a."""
        if not self._harmonic:
            xm = self.mid
            return (self.a_mid * self.widths, (self.a_mid - xm * self.weight.da(xm)) * self.widths,
                    xm * self.widths)
        x = self.nodes
        with np.errstate(divide="ignore", invalid="ignore"):
            xa = np.where(x > 0, x / np.asarray(self.weight.a(x), dtype=float), 0.0)
        return (self.a_cell * self.widths, self.a_cell**2 * np.diff(xa),
                self.a_cell * x_over_a_integrals(self.weight, x))

    def flux_coefficients(self):
        """Weights (c0, c1, c2) with u_x(1) ~ c0 u_n + c1 u_{n-1} + c2 u_{n-2}, exact for quadratics."""
        h1, h2 = self.widths[-1], self.widths[-2]
        return ((2 * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2)))

    def courant_spacing(self) -> float:
        """min_i h_i / sqrt(a(x_{i+1/2})): the time step scale of the explicit scheme."""
        with np.errstate(divide="ignore"):
            return float(np.min(self.widths / np.sqrt(np.maximum(self.a_mid, self.a_cell))))

    def free_slice(self, bc) -> slice:
        lo = 1 if self.regime == WEAK else 0
        hi = self.n + 1 if is_damped(bc) else self.n
        return slice(lo, hi)


def inverse_a_integrals(w: Weight, x: np.ndarray) -> np.ndarray:
    """int_{x_i}^{x_{i+1}} dx / a(x) for consecutive nodes (weak regime)."""
    if w.kind == "power":
        e = 1.0 - w.theta
        if e == 1.0:
            return np.diff(x)
        p = x**e / e
        return np.diff(p)
    out = np.empty(x.size - 1)
    for i in range(x.size - 1):
        out[i] = quad(lambda s: 1.0 / float(w.a(s)), x[i], x[i + 1], limit=200)[0]
    return out


def x_over_a_integrals(w: Weight, x: np.ndarray) -> np.ndarray:
    """int_{x_i}^{x_{i+1}} x / a(x) dx for consecutive nodes."""
    if w.kind == "power":
        e = 2.0 - w.theta
        return np.diff(x**e / e)
    out = np.empty(x.size - 1)
    for i in range(x.size - 1):
        out[i] = quad(lambda s: s / float(w.a(s)), x[i], x[i + 1], limit=200)[0]
    return out


@dataclass
class GridState:
    t: float
    u: np.ndarray
    v: np.ndarray
    regime: str
    bc_right: object = field(default_factory=Dirichlet)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float).copy()
        self.v = np.asarray(self.v, dtype=float).copy()
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have the same size")
        if self.regime == WEAK:
            self.u[0] = 0.0
            self.v[0] = 0.0
        if isinstance(self.bc_right, Dirichlet):
            self.u[-1] = 0.0
            self.v[-1] = 0.0


@dataclass
class EnergyTrace:
    times: np.ndarray
    energy: np.ndarray
    boundary_u: np.ndarray
    boundary_v: np.ndarray
    boundary_flux: np.ndarray
    cumulative_trace: np.ndarray
    snapshots: Optional[np.ndarray] = None
    snapshot_v: Optional[np.ndarray] = None
    snapshot_times: Optional[np.ndarray] = None
    final: Optional[GridState] = None

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.energy, self.boundary_u, self.boundary_v,
                                self.boundary_flux, self.cumulative_trace])
        np.savetxt(path, data, delimiter=",", header="t,E,u1,v1,flux1,cumtrace", comments="", fmt="%.17g")


def apply_operator(g: Grid, u, bc=None) -> np.ndarray:
    """(a u_x)_x in flux form (-M^{-1} K u); boundary rows encode the regime and the right condition."""
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n + 1,):
        raise ValueError(f"expected {g.n + 1} node values, got {u.shape}")
    flux = g.a_cell * np.diff(u) / g.widths
    m = g.mass()
    out = np.empty_like(u)
    out[1:-1] = (flux[1:] - flux[:-1]) / m[1:-1]
    out[0] = 0.0 if g.regime == WEAK else flux[0] / m[0]
    if bc is None or isinstance(bc, Dirichlet):
        out[-1] = 0.0
    else:
        # free right node with natural (zero) flux; boundary law terms are added by the integrator
        out[-1] = -flux[-1] / m[-1]
    return out


def discrete_inner(g: Grid, u, w) -> float:
    return float(np.sum(g.mass() * np.asarray(u) * np.asarray(w)))


def dirichlet_form(g: Grid, u) -> float:
    du = np.diff(np.asarray(u, dtype=float))
    return float(np.sum(g.a_cell * du * du / g.widths))


def discrete_energy(g: Grid, s: GridState, beta: Optional[float] = None) -> float:
    e = 0.5 * discrete_inner(g, s.v, s.v) + 0.5 * dirichlet_form(g, s.u)
    if beta is None and is_damped(s.bc_right):
        beta = s.bc_right.beta
    if beta:
        e += 0.5 * beta * g.a1 * s.u[-1] ** 2
    return e


def one_sided_flux(g: Grid, u) -> float:
    """Second-order backward difference for u_x at x = 1."""
    c0, c1, c2 = g.flux_coefficients()
    return c0 * u[-1] + c1 * u[-2] + c2 * u[-3]


def boundary_flux(g: Grid, s: GridState) -> float:
    if len(s.u) < 4:
        raise ValueError("need n >= 3")
    bc = s.bc_right
    if isinstance(bc, LinearDamped):
        return -s.v[-1] - bc.beta * s.u[-1]
    if isinstance(bc, NonlinearDamped):
        return -float(bc.law.rho(s.v[-1])) - bc.beta * s.u[-1]
    return one_sided_flux(g, s.u)


def poincare_ratio(g: Grid, u) -> float:
    """trapezoid(u^2) / sum a_cell u_x^2 h for a grid function vanishing at x = 1."""
    return discrete_inner(g, u, u) / dirichlet_form(g, u)


def trace_ratio(g: Grid, u) -> float:
    """u(1)^2 / (||u||^2 + sum a_cell u_x^2 h)."""
    return float(u[-1] ** 2) / (discrete_inner(g, u, u) + dirichlet_form(g, u))
