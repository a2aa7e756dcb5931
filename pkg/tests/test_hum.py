import math

import numpy as np
import pytest

from degenwave.hum import (HumOperator, HumProblem, conjugate_gradient, lower_bracket, modal_gram_min_eigenvalue,
                           optimality_check, solve_hum, verify_transposition_identity)
from degenwave.weights import Weight


def _problem(theta, T, n=200, y0=None):
    x = np.arange(n + 1) / n
    y0 = np.sin(math.pi * x) if y0 is None else y0
    return HumProblem(Weight.power(theta), T, y0, np.zeros(n + 1), n)


def _random_pair(op, rng):
    return rng.standard_normal(op.m), rng.standard_normal(op.m)


def test_rejects_short_horizon():
    with pytest.raises(ValueError):
        _problem(0.5, 3.0)


def test_zero_data():
    sol = solve_hum(_problem(0.5, 5.3, y0=np.zeros(201)))
    assert sol.iterations == 0 and np.all(sol.f == 0)


def test_gram_linear_and_symmetric():
    op = HumOperator(Weight.power(0.5), 5.3, 60, 0.5 / 60)
    rng = np.random.default_rng(0)
    z = (np.zeros(op.m), np.zeros(op.m))
    g0 = op.gram(z)
    assert np.all(g0[0] == 0) and np.all(g0[1] == 0)
    for _ in range(3):
        W, V = _random_pair(op, rng), _random_pair(op, rng)
        a, b = op.inner(op.gram(W), V), op.inner(W, op.gram(V))
        assert abs(a - b) <= 1e-10 * max(abs(a), abs(b))


@pytest.mark.parametrize("theta,T", [(0.0, 2.5), (0.0, 3.0), (0.5, 5.3), (1.5, 19.8)])
def test_coercive_on_low_modes(theta, T):
    # the lowest quarter of the discrete modes propagates at close to the continuous speed
    w = Weight.power(theta)
    op = HumOperator(w, T, 100, 0.005)
    assert modal_gram_min_eigenvalue(op, 0.25) >= lower_bracket(w, T)


def test_classical_control():
    sol = solve_hum(_problem(0.0, 2.5), tol=1e-3, max_iter=200)
    assert sol.converged and sol.iterations <= 200
    assert sol.relative_final_norm <= 1e-3


def test_conjugate_residual_monotone():
    sol = solve_hum(_problem(0.5, 5.3))
    r = np.array(sol.cg_residuals)
    assert np.all(np.diff(r) < 0)
    # the Krylov residual is the final state, measured in the energy norm
    assert sol.relative_final_norm == pytest.approx(r[-1], rel=1e-3)


def test_cg_and_cr_agree():
    p = _problem(0.5, 5.3, n=100)
    a = solve_hum(p, method="cr")
    b = solve_hum(p, method="cg")
    assert np.allclose(a.f, b.f, rtol=0, atol=1e-6 * np.max(np.abs(a.f)))
    with pytest.raises(ValueError):
        solve_hum(p, method="gmres")


@pytest.mark.parametrize("theta,T", [(0.0, 2.5), (0.5, 5.3)])
def test_transposition_identity(theta, T):
    res = []
    for n in (50, 100, 200):
        p = _problem(theta, T, n)
        t = (np.arange(int(round(T / p.dt))) + 0.5) * p.dt
        f = np.sin(math.pi * t / T) ** 2
        res.append(verify_transposition_identity(p, f).max_residual)
        assert verify_transposition_identity(p, f, mode="exact").max_residual < 1e-12
    assert res[-1] <= 0.01
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.1)
    zero = verify_transposition_identity(_problem(theta, T, 50, np.zeros(51)), np.zeros_like(t[: int(round(T / 0.01))]))
    assert zero.max_residual == 0.0


def test_hum_control_is_minimal():
    p = _problem(0.5, 5.3, n=100)
    sol = solve_hum(p)
    rep = optimality_check(p, sol)
    assert rep.hum_is_minimal
    assert max(rep.perturbed_final_norms) <= 10 * max(sol.final_state_norm, 1e-8)


def test_diagnostics_serialisable():
    import json
    sol = solve_hum(_problem(0.5, 5.3, n=50))
    json.dumps(sol.diagnostics())
