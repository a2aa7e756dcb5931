import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

from degenwave.discretization import Grid, apply_operator
from degenwave.spectral import (SpectralError, bessel_j, eigen_quotient, eigen_solution, first_bessel_zero,
                                first_eigenpair, optimal_phase)
from degenwave.weights import Weight

# frozen from mpmath at 30 digits
J_VALUES = [
    (0.0, 0.5, 0.93846980724081290423),
    (0.0, 7.3, 0.28821694763501439904),
    (1.0, 2.0, 0.5767248077568733872),
    (1.0, 15.0, 0.20510403861352276115),
    (0.5, 3.0, 0.065008182877375778114),
    (1.0 / 3.0, 12.5, 0.042587372807223299355),
    (2.5, 25.0, 0.0020381361533260554375),
    (0.25, 40.0, 0.054911752342599731717),
]
ZEROS = {0.0: 2.4048255576957727686, 1.0: 3.8317059702075123156, 1.0 / 3.0: 2.9025862484169524534,
         2.0: 5.1356223018406825563, 19.0: 24.338249623407174553}


def _bisect_zero(nu, lo, hi, iters=200):
    f = lambda x: special.jv(nu, x)
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("nu,x,expected", J_VALUES)
def test_bessel_values(nu, x, expected):
    assert bessel_j(nu, x) == pytest.approx(expected, abs=1e-12)


def test_bessel_at_origin():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(1.0, 0.0) == 0.0
    assert abs(bessel_j(0.0, 2.404825557695773)) < 1e-10


@pytest.mark.parametrize("nu", sorted(ZEROS))
def test_first_zero_frozen(nu):
    assert first_bessel_zero(nu) == pytest.approx(ZEROS[nu], abs=1e-12)


def test_first_zero_against_bisection():
    assert first_bessel_zero(0.0) == pytest.approx(_bisect_zero(0.0, 2.0, 3.0), abs=1e-12)
    assert first_bessel_zero(1.0) == pytest.approx(_bisect_zero(1.0, 3.5, 4.0), abs=1e-12)
    assert first_bessel_zero(0.5) == pytest.approx(math.pi, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(nu=st.floats(1.0, 10.0), x=st.floats(0.1, 20.0))
def test_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(nu=st.floats(0.0, 10.0), x=st.floats(1e-6, 60.0))
def test_against_scipy(nu, x):
    assert bessel_j(nu, x) == pytest.approx(special.jv(nu, x), abs=1e-11)


def test_subnormal_argument():
    # scipy flushes this to 0; the leading series term is (x/2)^nu / Gamma(nu + 1)
    x = 2.2250738585072014e-308
    assert bessel_j(0.03125, x) == pytest.approx(2.42068068743237e-10, rel=1e-12)
    assert bessel_j(0.0, 5e-324) == 1.0


def test_eigenpairs():
    ep = first_eigenpair(1.0)
    assert (ep.nu_theta, ep.kappa_theta) == (0.0, 0.5)
    assert ep.lambda_theta == pytest.approx(ZEROS[0.0] ** 2 / 4, rel=1e-13)
    assert ep.lambda_theta == pytest.approx(1.4458, abs=1e-4)
    ep = first_eigenpair(1.5)
    assert (ep.nu_theta, ep.kappa_theta) == (1.0, 0.25)
    assert ep.lambda_theta == pytest.approx(ZEROS[1.0] ** 2 / 16, rel=1e-13)
    assert float(ep.eigenfunction(np.array([1.0]))[0]) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(SpectralError):
        first_eigenpair(0.5)


@pytest.mark.parametrize("theta", [1.0, 1.5, 1.8])
def test_eigenfunction_normalised(theta):
    ep = first_eigenpair(theta)
    k = ep.kappa_theta
    # int_0^1 y^2 dx after x = s^(1/kappa)
    f = lambda s: float(ep.eigenfunction(np.array([s ** (1.0 / k)]))[0]) ** 2 * s ** (1.0 / k - 1.0) / k
    assert quad(f, 0.0, 1.0, limit=200)[0] == pytest.approx(1.0, rel=1e-9)


def test_closed_form_quotient():
    k = 0.5
    w = math.sqrt(ZEROS[0.0] ** 2 / 4)
    ref = 2 * 10 * k * (1 - math.sin(2 * w * 10) / (2 * w * 10))
    assert eigen_quotient(1.0, 10.0) == pytest.approx(ref, rel=1e-13)
    assert eigen_quotient(1.0, 1e6) / 1e6 == pytest.approx(1.0, rel=1e-5)


@pytest.mark.parametrize("theta", [1.0, 1.5, 1.8, 1.95, 1.99])
def test_optimal_phase_below_bound(theta):
    T = 10.0
    q = eigen_quotient(theta, T, optimal_phase(theta, T))
    assert q <= (2 - theta) * T
    phases = np.linspace(0, math.pi, 721)
    assert q <= min(eigen_quotient(theta, T, p) for p in phases) + 1e-12


def _discrete_first_eigenvalue(g):
    d, o = g.stiffness_bands()
    m = g.mass()[:-1]
    sm = np.sqrt(m)
    return eigh_tridiagonal(d[:-1] / m, o[:-1] / (sm[:-1] * sm[1:]), eigvals_only=True,
                            select="i", select_range=(0, 0))[0]


@pytest.mark.parametrize("theta,grading", [(1.0, 1.0), (1.5, 4.0), (1.8, 10.0)])
def test_eigenvalue_error_second_order(theta, grading):
    lam = first_eigenpair(theta).lambda_theta
    err = [abs(_discrete_first_eigenvalue(Grid(Weight.power(theta), n, grading)) - lam) / lam
           for n in (100, 200, 400)]
    orders = np.log2(np.array(err[:-1]) / np.array(err[1:]))
    assert np.all(orders >= 1.8), (err, orders)


def test_operator_on_eigenfunction_theta_one():
    # y = c J_0(j sqrt x) is analytic in x: interior residual of A y + lambda y is O(h^2)
    lam = first_eigenpair(1.0).lambda_theta
    res = []
    for n in (100, 200, 400):
        g = Grid(Weight.power(1.0), n)
        y, _, _, _ = eigen_solution(1.0, 1.0, g.nodes, phase=math.pi / 2)
        res.append(np.max(np.abs(apply_operator(g, y) + lam * y)[1:-1]))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.05)
