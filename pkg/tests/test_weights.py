import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenwave.discretization import Grid, dirichlet_form, discrete_inner, poincare_ratio, trace_ratio
from degenwave.weights import Weight, WeightError, compute_constants, direct_constant, observability_bracket

# M_{a,beta} for x^0.5, beta = 1: C' = 4/3, alpha = 1/2, C'' = 7/3, eta1 = 5/2, eta2 = 97/32
M_HALF_BETA1 = 69.9923235180714


def _m_by_hand(mu, a1, beta):
    Cp = min(4.0, 2.0 / (2.0 - mu)) / a1
    alpha = min(1.0 / Cp, beta * a1 / 2.0)
    Cpp = 2.0 * max(1.0 + mu / 4.0, 1.0 / a1 + mu / 4.0 * Cp, mu / (2.0 * beta * a1))
    eta1 = 1.0 + 1.5 * a1
    eta2 = beta * (1.0 + beta - mu) + 0.5 * (2.0 * beta - mu / 2.0) ** 2
    return (2.0 / (2.0 - mu)) * (2.0 * Cpp + eta1 / a1
                                 + eta2**2 * (1.0 + beta**-3) / (2.0 - mu) * (1.0 + 1.0 / (beta * alpha))
                                 + 2.0 * eta2 / (beta * math.sqrt(alpha)))


def test_power_mu_and_regime():
    w = Weight.power(0.5)
    assert w.mu_a == 0.5 and w.regime == "weak"
    w = Weight.power(1.5)
    assert w.mu_a == 1.5 and w.regime == "strong"


def test_oscillatory_mu_bounded():
    w = Weight.oscillatory(0.5, 0.25)
    assert 0.5 <= w.mu_a <= 1.0
    assert float(w.a(np.array([1.0]))[0]) == pytest.approx(1.0, abs=1e-15)


def test_pointwise_values():
    w2 = Weight.nonadmissible_power(2.0)
    assert float(w2.a(np.array([0.5]))[0]) == 0.25
    assert not w2.admissible
    w1 = Weight.power(1.0)
    assert float(w1.a(np.array([1.0]))[0]) == 1.0
    assert float(w1.da(np.array([1.0]))[0]) == 1.0


def test_rejects_bad_parameters():
    with pytest.raises(WeightError):
        Weight.power(2.0)
    with pytest.raises(WeightError):
        Weight.oscillatory(1.0, 0.6)
    with pytest.raises(WeightError):
        compute_constants(Weight.nonadmissible_power(2.5))
    with pytest.raises(WeightError):
        Weight.tabulated([0.0, 0.5, 1.0], [0.1, 0.5, 1.0])


def test_known_constants():
    assert compute_constants(Weight.power(1.0)).C_a == 1.0
    assert compute_constants(Weight.power(0.0)).T_a == 2.0
    c = compute_constants(Weight.power(0.5), beta=1.0)
    assert c.M_a_beta == pytest.approx(M_HALF_BETA1, rel=1e-13)
    assert c.M_a_beta == pytest.approx(_m_by_hand(0.5, 1.0, 1.0), rel=1e-14)
    assert c.alpha_a == 0.5


def test_beta_zero_leaves_stabilization_constants_absent():
    c = compute_constants(Weight.power(0.5), beta=0.0)
    assert c.alpha_a is None and c.C_a_doubleprime is None and c.M_a_beta is None


def test_observability_time_grows_with_theta():
    T = [compute_constants(Weight.power(t)).T_a for t in (0.5, 1.0, 1.5, 1.9)]
    assert all(a < b for a, b in zip(T, T[1:]))


def test_bracket_vanishes_at_its_zero():
    for th in (0.0, 0.5, 1.5):
        w = Weight.power(th)
        c = compute_constants(w)
        assert observability_bracket(w, c.T_bracket) == pytest.approx(0.0, abs=1e-12)
        assert direct_constant(w, 1.0) == 7.0


@pytest.mark.parametrize("w", [Weight.power(0.5), Weight.power(1.5), Weight.oscillatory(0.5, 0.25),
                               Weight.oscillatory(1.2, 0.2)])
def test_lower_power_bound(w):
    x = np.geomspace(1e-12, 1.0, 5000)
    assert np.all(w.a_at_1 * x**w.mu_a <= w.a(x) * (1 + 1e-12))


def test_tabulated_matches_power():
    x = np.linspace(0.0, 1.0, 401)
    w = Weight.tabulated(x, x**1.5, 1.5 * np.sqrt(x))
    assert w.mu_a == pytest.approx(1.5, abs=5e-3)
    assert w.a_at_1 == pytest.approx(1.0)
    assert w.regime == "strong"
    # slopes from PCHIP alone are cruder but the exponent at 0 is still not rounded to 2
    assert Weight.tabulated(x, x**1.5).mu_a < 1.75


def _random_grid_function(rng, g, vanish_right=True):
    u = rng.standard_normal(g.n + 1)
    if g.regime == "weak":
        u[0] = 0.0
    if vanish_right:
        u[-1] = 0.0
    return u


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, 1.5, 1.9])
def test_discrete_poincare_and_trace(theta):
    w = Weight.power(theta)
    c = compute_constants(w)
    rng = np.random.default_rng(1)
    for n in (8, 50, 200):
        g = Grid(w, n)
        for _ in range(100 // 3 + 1):
            u = _random_grid_function(rng, g)
            assert poincare_ratio(g, u) <= c.C_a
            u = _random_grid_function(rng, g, vanish_right=False)
            assert trace_ratio(g, u) <= max(2.0, 1.0 / w.a_at_1)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0.0, 1.95), k=st.integers(1, 6), beta=st.floats(0.1, 5.0))
def test_smooth_poincare_and_norm_equivalence(theta, k, beta):
    w = Weight.power(theta)
    c = compute_constants(w, beta)
    g = Grid(w, 200)
    x = g.nodes
    u = np.cos((k - 0.5) * math.pi * x) if g.regime == "strong" else np.sin((k - 0.5) * math.pi * x)
    u0 = u.copy()
    u0[-1] = 0.0
    if np.any(u0):
        assert poincare_ratio(g, u0) <= c.C_a
    grad = dirichlet_form(g, u)
    l2 = discrete_inner(g, u, u)
    triple = grad + beta * w.a_at_1 * u[-1] ** 2
    assert triple <= c.gamma_a * (l2 + grad) * (1 + 1e-12)
    assert triple >= c.alpha_a * l2 * (1 - 1e-12)
