import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenwave.decay import (DEFAULT_TABLE_LAWS, DecayError, build_decay_model, calibrate, decay_run, gamma_floor,
                             envelope_exponent, fit_decay_rate, predict_envelope, rate_law,
                             verify_integral_inequality)
from degenwave.dynamics import FeedbackLaw


def _poly_oracle(p, r0, y):
    """Closed forms for g(s) = s^p: H(x) = x^((p+1)/2) on [0, r0^2], +inf beyond."""
    y = np.asarray(y, dtype=float)
    y0 = (p + 1) / 2 * r0 ** (p - 1)
    xs = (2 * y / (p + 1)) ** (2 / (p - 1))
    inner = xs * y * (p - 1) / (p + 1)
    edge = r0**2 * y - r0 ** (p + 1)
    hstar = np.where(y <= y0, inner, edge)
    return hstar, y0


@pytest.fixture(scope="module", params=[2.0, 3.0, 5.0])
def poly_model(request):
    return request.param, build_decay_model(FeedbackLaw("poly", request.param))


def test_polynomial_closed_forms(poly_model):
    p, m = poly_model
    assert not m.exponential_regime and m.r0 == 0.5
    x = m.x_grid
    assert np.allclose(m.H(x), x ** ((p + 1) / 2), rtol=1e-12, atol=0)
    assert np.allclose(m.H_prime(x), (p + 1) / 2 * x ** ((p - 1) / 2), rtol=1e-12, atol=0)
    y = m.H_prime(x)
    assert np.allclose(m.H_prime_inv(y), x, rtol=1e-10, atol=0)
    ref, y0 = _poly_oracle(p, m.r0, y)
    assert m.y0 == pytest.approx(y0, rel=1e-14)
    assert np.max(np.abs(m.Hstar(y) / ref - 1)) <= 1e-4
    ybig = y0 * np.array([1.5, 4.0, 100.0])
    assert np.allclose(m.Hstar(ybig), _poly_oracle(p, m.r0, ybig)[0], rtol=1e-10)
    # L(y) = H*(y) / y and Lambda_H = 2 / (p + 1)
    assert np.max(np.abs(m.L(y) * y / ref - 1)) <= 1e-4
    assert np.max(np.abs(m.LambdaH(x) - 2 / (p + 1))) <= 1e-4
    assert m.simplified_available


def test_psi0_linear_for_polynomials(poly_model):
    p, m = poly_model
    for x in (1 / m.y0, 2.0 / m.y0, 10.0, 1e3):
        x = max(x, 1 / m.y0)
        ref = 1 / m.y0 + (p + 1) / (p - 1) * (x - 1 / m.y0)
        assert m.psi0(x) == pytest.approx(ref, rel=1e-8)
        assert m.psi0_inv(m.psi0(x)) == pytest.approx(x, rel=1e-8)


@pytest.mark.parametrize("text", DEFAULT_TABLE_LAWS)
def test_Linv_roundtrip_and_lambda_range(text):
    m = build_decay_model(FeedbackLaw.parse(text))
    y = np.geomspace(m.H_prime(m.x_grid[0]) * 10, m.y0, 60)
    z = m.L(y)
    assert np.all(np.diff(z) > 0)
    assert np.max(np.abs(m.Linv(z) / y - 1)) <= 1e-8
    lam = m.LambdaH(m.x_grid)
    assert np.all((lam >= 0) & (lam <= 1))


@settings(max_examples=30, deadline=None)
@given(p=st.floats(1.2, 8.0))
def test_lambda_in_unit_interval_polynomial(p):
    m = build_decay_model(FeedbackLaw("poly", p), points=300)
    lam = m.LambdaH(m.x_grid)
    assert np.all((lam >= 0) & (lam <= 1))
    assert np.allclose(lam, 2 / (p + 1), atol=1e-6)


def test_linear_law_is_exponential_regime():
    m = build_decay_model(FeedbackLaw("linear", 1.0))
    assert m.exponential_regime and not m.simplified_available
    assert np.allclose(m.H_prime(m.x_grid[::100]), 1.0)
    with pytest.raises(DecayError):
        predict_envelope(m, 1.0, 10.0, 1.0, [1.0, 2.0])


def test_polylog_radius_capped():
    law = FeedbackLaw.parse("polylog:3,1")
    m = build_decay_model(law)
    assert m.r0 <= law.s0


@pytest.mark.parametrize("text", DEFAULT_TABLE_LAWS)
def test_envelope_rates(text):
    m = build_decay_model(FeedbackLaw.parse(text))
    fit = envelope_exponent(m)
    assert fit.exponent == pytest.approx(fit.expected, rel=0.05)
    assert fit.r2 >= 0.99


def test_rate_law_names():
    assert rate_law(FeedbackLaw("poly", 3.0)).expected == pytest.approx(-1.0)
    assert rate_law(FeedbackLaw("poly", 2.0)).expected == pytest.approx(-2.0)


def test_envelope_validation():
    m = build_decay_model(FeedbackLaw("poly", 3.0))
    with pytest.raises(DecayError):
        predict_envelope(m, 1.0, 1e-9, 1.0, [1.0])
    env = predict_envelope(m, 1.0, 10.0, 2.0, [0.1, 1e3, 1e5], kappa=1.0)
    assert math.isnan(env.full[0])
    assert env.full[1] > env.full[2] > 0
    assert env.simplified[1] > env.simplified[2] > 0


def test_fit_rejects_degenerate_traces():
    t = np.linspace(0, 10, 100)
    with pytest.raises(DecayError):
        fit_decay_rate(t, np.zeros_like(t), "power")
    with pytest.raises(DecayError):
        fit_decay_rate(t, np.ones_like(t), "power")
    with pytest.raises(DecayError):
        fit_decay_rate(t, np.exp(-t), "quadratic")


def test_fit_recovers_synthetic_rates():
    t = np.linspace(0, 1e4, 5001)
    E = (1 + t) ** -1.5
    assert fit_decay_rate(t, E, "power").exponent == pytest.approx(-1.5, rel=1e-2)
    E = np.exp(-0.01 * t)
    f = fit_decay_rate(t, E, "exponential")
    assert f.exponent == pytest.approx(-0.01, rel=1e-10) and f.r2 > 0.999999


def test_integral_inequality_zero_trace():
    m = build_decay_model(FeedbackLaw("poly", 3.0))
    t = np.linspace(0, 10, 50)
    assert verify_integral_inequality(t, np.zeros_like(t), m, 1.0).M_min == 0.0


def test_linear_feedback_M_stable_under_extension():
    m = build_decay_model(FeedbackLaw("linear", 1.0))
    Ms = []
    for T in (100.0, 200.0):
        tr = decay_run(FeedbackLaw("linear", 1.0), n=200, T=T)
        gamma = 1.01 * gamma_floor(m, tr.energy[0])
        Ms.append(verify_integral_inequality(tr.times, tr.energy, m, gamma).M_min)
    assert np.all(np.isfinite(Ms))
    assert Ms[1] == pytest.approx(Ms[0], rel=0.05)


def test_cubic_feedback_M_bounded_and_dominated():
    law = FeedbackLaw("poly", 3.0)
    m = build_decay_model(law)
    Ms = []
    for T in (500.0, 1000.0):
        cal, env = calibrate(decay_run(law, n=200, T=T), m)
        assert cal.dominated and cal.gamma > cal.gamma_floor
        Ms.append(cal.M)
    assert Ms[1] <= 1.5 * Ms[0]


def test_decay_run_needs_positive_beta():
    with pytest.raises(DecayError):
        decay_run(FeedbackLaw("poly", 3.0), beta=0.0, T=1.0)
