import math

import numpy as np
import pytest

from degenwave.dynamics import Bump, Eigen, RandomSmooth, SimConfig
from degenwave.discretization import LinearDamped
from degenwave.observability import (ObservabilityError, ObservabilityReport, blowup_sweep, check_bounds,
                                     eigen_trace_quotient, failure_demo, observe, silent_horizon, trace_quotient)
from degenwave.weights import Weight


def test_zero_data_rejected():
    with pytest.raises(ObservabilityError):
        observe(Weight.power(0.5), 1.0, Bump(0.5, 0.2, 0.0), n=50)


def test_damped_problem_rejected():
    cfg = SimConfig(Weight.power(0.5), 50, 1.0, Bump(0.5, 0.2), bc_right=LinearDamped(1.0))
    with pytest.raises(ObservabilityError):
        trace_quotient(cfg)


def test_classical_quotient():
    # u = cos(pi t) sin(pi x): int_0^2 pi^2 cos^2(pi t) dt = pi^2 and E(0) = pi^2 / 4
    from degenwave.dynamics import Samples
    import tempfile, os
    x = np.linspace(0, 1, 401)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "sin.csv")
        np.savetxt(path, np.column_stack([x, np.sin(math.pi * x), 0 * x]), delimiter=",",
                   header="x,u0,u1", comments="")
        rep = observe(Weight.power(0.0), 2.0, Samples(path), n=400)
    assert rep.quotient == pytest.approx(4.0, rel=1e-4)


def test_uninformative_flag():
    w = Weight.power(0.5)
    rep = observe(w, 1.0, RandomSmooth(0), n=100)
    chk = check_bounds(rep)
    assert rep.lower_bound < 0 and not chk.informative and chk.label == "uninformative"
    assert chk.passed


@pytest.mark.parametrize("theta", [0.5, 1.5])
def test_brackets_after_observability_time(theta):
    w = Weight.power(theta)
    T = 1.2 * w.constants().T_bracket
    for seed in range(3):
        chk = check_bounds(observe(w, T, RandomSmooth(seed), n=200))
        assert chk.informative and chk.passed


def test_bracket_zero_lags_observability_time_when_strongly_degenerate():
    c = Weight.power(1.5).constants()
    assert c.T_a < c.T_bracket
    c = Weight.power(0.5).constants()
    assert c.T_bracket < c.T_a


def test_eigen_quotient_theta_one():
    q = eigen_trace_quotient(1.0, 3.0, 400)
    from degenwave.spectral import eigen_quotient
    assert q == pytest.approx(eigen_quotient(1.0, 3.0), rel=0.02)


def test_blowup_closed_form():
    rows = blowup_sweep([1.0, 1.5, 1.8, 1.95, 1.99], T=10.0, n=None)
    bounds = [r.closed_form for r in rows]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    for r, cap in zip(rows, (10, 5, 2, 0.5, 0.1)):
        assert r.bound == pytest.approx(cap)
        assert r.closed_form <= cap
        assert r.simulated is None and r.rel_error is None
    with pytest.raises(ObservabilityError):
        blowup_sweep([0.5], n=None)


def test_silent_horizon_values():
    assert silent_horizon(2.0, 0.3) == pytest.approx(math.log(1 / 0.3))
    assert silent_horizon(3.0, 0.4) == pytest.approx(2 * (0.4**-0.5 - 1))
    assert silent_horizon(3.0, 0.4) == pytest.approx(1.162, abs=1e-3)
    assert silent_horizon(0.0, 0.5) == pytest.approx(0.5)
    with pytest.raises(ObservabilityError):
        silent_horizon(2.0, 1.2)


def test_failure_signal_arrives_after_horizon():
    early = failure_demo(2.0, (0.1, 0.3), 1.0, n=400)
    late = failure_demo(2.0, (0.1, 0.3), 3.0, n=400)
    assert early.horizon == pytest.approx(1.204, abs=1e-3)
    assert early.ratio <= 1e-6
    assert late.ratio > 1e-3
    with pytest.raises(ObservabilityError):
        failure_demo(2.0, (0.0, 0.3), 1.0, n=100)


def test_report_serialises():
    rep = ObservabilityReport(0.5, 1.0, 2.0, -1.0, 7.0, 1.0, "x")
    assert rep.to_dict()["quotient"] == 2.0
