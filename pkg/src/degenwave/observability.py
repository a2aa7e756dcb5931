"""Boundary observability: trace quotients, the direct and observability brackets,
the eigen-solution upper bounds on C_T, and the theta >= 2 silent-horizon demo."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

from .discretization import Dirichlet, EnergyTrace
from .dynamics import Bump, Eigen, SimConfig, run
from .spectral import eigen_quotient, optimal_phase
from .weights import Weight, direct_constant, observability_bracket


class ObservabilityError(ValueError):
    pass


@dataclass
class ObservabilityReport:
    theta: float
    T: float
    quotient: float
    lower_bound: float
    direct_bound: float
    a_at_1: float
    data_label: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BoundsCheck:
    lower_ok: bool
    upper_ok: bool
    informative: bool
    lower_margin: float
    upper_margin: float
    label: str

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok


def trace_quotient(cfg: SimConfig, T: Optional[float] = None) -> float:
    """int_0^T u_x(t,1)^2 dt / E(0) from a conservative run."""
    if T is not None and abs(T - cfg.T_final) > 1e-12:
        cfg = replace(cfg, T_final=T)
    if not isinstance(cfg.bc_right, Dirichlet):
        raise ObservabilityError("trace quotients are defined for the conservative problem")
    tr = run(cfg)
    e0 = tr.energy[0]
    if e0 <= 0:
        raise ObservabilityError("initial energy is zero")
    return float(tr.cumulative_trace[-1] / e0)


def report_from_trace(w: Weight, T: float, tr: EnergyTrace, label: str = "") -> ObservabilityReport:
    if tr.energy[0] <= 0:
        raise ObservabilityError("initial energy is zero")
    q = float(tr.cumulative_trace[-1] / tr.energy[0])
    return ObservabilityReport(w.theta, T, q, observability_bracket(w, T), direct_constant(w, T), w.a_at_1, label)


def observe_run(w: Weight, T: float, data, n: int = 400, dt: Optional[float] = None,
                label: str = "") -> tuple[ObservabilityReport, EnergyTrace]:
    tr = run(SimConfig(w, n, T, data, dt=dt))
    return report_from_trace(w, T, tr, label or repr(data)), tr


def observe(w: Weight, T: float, data, n: int = 400, dt: Optional[float] = None, label: str = "") -> ObservabilityReport:
    return observe_run(w, T, data, n, dt, label)[0]


def check_bounds(rep: ObservabilityReport) -> BoundsCheck:
    """a(1) q >= bracket (informative only when bracket > 0) and a(1) q <= 6T + 1/min(1, a(1))."""
    aq = rep.a_at_1 * rep.quotient
    lower_margin = aq - rep.lower_bound
    upper_margin = rep.direct_bound - aq
    informative = rep.lower_bound > 0
    return BoundsCheck(lower_margin >= 0, upper_margin >= 0, informative, lower_margin, upper_margin,
                       "ok" if informative else "uninformative")


@dataclass
class BlowupRow:
    theta: float
    T: float
    bound: float
    closed_form: float
    closed_form_sin_phase: float
    simulated: Optional[float]
    phase: float

    @property
    def rel_error(self) -> Optional[float]:
        if self.simulated is None:
            return None
        return abs(self.simulated - self.closed_form) / self.closed_form


def liouville_grading(theta: float) -> float:
    """Exponent q = 2/(2 - theta): on x = s^q the local Courant ratio sqrt(a)/h is uniform."""
    return 2.0 / (2.0 - theta)


def eigen_trace_quotient(theta: float, T: float, n: int, phase: float = 0.0, dt: Optional[float] = None,
                         grading: float = 1.0) -> float:
    """Simulated a(1) quotient for eigen data sin(omega t + phase) y_theta."""
    w = Weight.power(theta)
    return trace_quotient(SimConfig(w, n, T, Eigen(theta, phase), dt=dt, grading=grading))


def blowup_sweep(thetas: Sequence[float], T: float = 10.0, n: Optional[int] = 800,
                 phase: str = "optimal", graded: bool = True) -> list[BlowupRow]:
    """Upper estimates of C_T(theta) from eigen-solutions (certified, since C_T is an infimum).

    ``phase='optimal'`` picks, within the eigen family sin(omega t + phi) y, the phase
    minimising the quotient; ``phase='sin'`` uses phi = 0. ``n=None`` skips simulation.
    With ``graded`` the simulation runs on x = s^q, q = 2/(2 - theta): as theta -> 2
    the eigenfunction varies on scales far below 1/n near x = 0.
    """
    rows = []
    for th in thetas:
        if not 1.0 <= th < 2.0:
            raise ObservabilityError("blow-up sweep needs theta in [1, 2)")
        ph = optimal_phase(th, T) if phase == "optimal" else 0.0
        cf = eigen_quotient(th, T, ph)
        q = liouville_grading(th) if graded else 1.0
        sim = eigen_trace_quotient(th, T, n, ph, grading=q) if n else None
        rows.append(BlowupRow(th, T, (2.0 - th) * T, cf, eigen_quotient(th, T, 0.0), sim, ph))
    return rows


def silent_horizon(theta: float, x2: float) -> float:
    """Travel time int_{x2}^1 dx / sqrt(x^theta) from the support edge to x = 1."""
    if not 0 < x2 < 1:
        raise ObservabilityError("x2 must lie in (0, 1)")
    if theta == 2.0:
        return math.log(1.0 / x2)
    return 2.0 * (x2 ** (1.0 - theta / 2.0) - 1.0) / (theta - 2.0)


@dataclass
class FailureReport:
    theta: float
    support: tuple
    T: float
    n: int
    horizon: float
    trace_energy: float
    energy0: float

    @property
    def ratio(self) -> float:
        return self.trace_energy / self.energy0


def failure_demo(theta: float, support: tuple, T: float, n: int = 1600, dt: Optional[float] = None) -> FailureReport:
    x1, x2 = support
    if not 0.0 < x1 < x2 < 1.0:
        raise ObservabilityError("support must be a subinterval of (0, 1) away from both ends")
    w = Weight.nonadmissible_power(theta)
    cfg = SimConfig(w, n, T, Bump(0.5 * (x1 + x2), x2 - x1), dt=dt)
    tr = run(cfg)
    return FailureReport(theta, (x1, x2), T, n, silent_horizon(theta, x2), float(tr.cumulative_trace[-1]),
                         float(tr.energy[0]))
