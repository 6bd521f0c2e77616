import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chi_capacity import specfun
from chi_capacity.errors import DomainError

mp.mp.dps = 30


def series_i(nu, x):
    """Ascending power series for I_nu(x), summed in extended precision."""
    q = (mp.mpf(x) / 2) ** 2
    term = (mp.mpf(x) / 2) ** nu / mp.factorial(nu)
    total, k = term, 0
    while term > total * mp.mpf(10) ** -28:
        k += 1
        term *= q / (k * (k + nu))
        total += term
    return total


def test_log_bessel_i_at_zero():
    assert specfun.log_bessel_i(0, 0.0) == 0.0
    assert specfun.log_bessel_i(1, 0.0) == -math.inf


def test_log_bessel_i_order2_at_10():
    # frozen from the mpmath power series oracle
    assert specfun.log_bessel_i(2, 10.0) == pytest.approx(7.7325967140414251987, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(nu=st.integers(0, 12), x=st.floats(1e-3, 700.0))
def test_log_bessel_i_matches_series(nu, x):
    ref = float(mp.log(series_i(nu, x)))
    got = specfun.log_bessel_i(nu, x)
    # |exp(got)/exp(ref) - 1| <= 1e-10, measured in the log domain
    assert abs(got - ref) <= 1e-10


def test_log_bessel_i_scaled_consistent():
    x = np.array([0.1, 3.0, 50.0, 1e4, 1e7])
    for nu in (0, 1, 5):
        assert np.allclose(specfun.log_bessel_i(nu, x, scaled=True) + x, specfun.log_bessel_i(nu, x), rtol=1e-14)


def test_log_bessel_i_huge_argument_finite():
    v = specfun.log_bessel_i(3, 1e12, scaled=True)
    assert math.isfinite(v)
    assert v == pytest.approx(-0.5 * math.log(2 * math.pi * 1e12), abs=1e-9)


def test_log_bessel_i_rejects_bad_input():
    with pytest.raises(DomainError):
        specfun.log_bessel_i(1.5, 1.0)
    with pytest.raises(DomainError):
        specfun.log_bessel_i(1, -1.0)


def test_bessel_k_scaled_integral_oracle():
    # e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt, frozen from mpmath quadrature
    assert specfun.bessel_k_scaled(0, 1.0) == pytest.approx(1.1444630798068950147, rel=1e-13)
    assert specfun.bessel_k_scaled(2, 0.5) == pytest.approx(12.448148218621052351, rel=1e-13)


def test_bessel_k_scaled_large_argument():
    for x in (1e3, 1e6):
        assert specfun.bessel_k_scaled(1, x) / math.sqrt(math.pi / (2 * x)) == pytest.approx(1.0, abs=2e-3)


def test_bessel_k_scaled_domain():
    with pytest.raises(DomainError):
        specfun.bessel_k_scaled(0, 0.0)


@settings(max_examples=40, deadline=None)
@given(nu=st.integers(0, 10), x=st.floats(1e-2, 500.0))
def test_wronskian(nu, x):
    # I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x, rebuilt from the scaled functions
    i0 = math.exp(specfun.log_bessel_i(nu, x, scaled=True))
    i1 = math.exp(specfun.log_bessel_i(nu + 1, x, scaled=True))
    k0 = specfun.bessel_k_scaled(nu, x)
    k1 = specfun.bessel_k_scaled(nu + 1, x)
    assert (i0 * k1 + i1 * k0) * x == pytest.approx(1.0, rel=1e-8)


def test_digamma_values():
    assert specfun.digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-15)
    assert specfun.digamma(2.0) == pytest.approx(1 - 0.5772156649015329, abs=1e-15)
    # psi(0.5) = -gamma - 2 ln 2 shifted three times by the recurrence
    assert specfun.digamma(3.5) == pytest.approx(1.1031566406452431872, rel=1e-14)
    assert specfun.EULER_GAMMA == pytest.approx(float(mp.euler), abs=1e-16)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 7.3])
def test_digamma_recurrence(x):
    assert abs(specfun.digamma(x + 1) - specfun.digamma(x) - 1 / x) <= 1e-12


def test_digamma_domain():
    with pytest.raises(DomainError):
        specfun.digamma(0.0)


def test_lerch_small_cases():
    assert specfun.lerch_phi_1n(0.5, 1) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert specfun.lerch_phi_1n(0.5, 2) == pytest.approx(4 * math.log(2) - 2, rel=1e-14)
    # frozen from the term series sum_k 0.9^k/(k+3)
    assert specfun.lerch_phi_1n(0.9, 3) == pytest.approx(1.368429482845055808, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.99])
@pytest.mark.parametrize("n", [1, 2, 3, 12])
def test_lerch_matches_series(alpha, n):
    a = mp.mpf(alpha)
    ref = float(mp.fsum(a**k / (k + n) for k in range(6000)))
    assert specfun.lerch_phi_1n(alpha, n) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(1e-4, 0.999), n=st.integers(1, 40))
def test_lerch_property(alpha, n):
    ref = float(mp.lerchphi(alpha, 1, n))
    assert specfun.lerch_phi_1n(alpha, n) == pytest.approx(ref, rel=1e-10)


def test_lerch_domain():
    with pytest.raises(DomainError):
        specfun.lerch_phi_1n(1.0, 2)
    with pytest.raises(DomainError):
        specfun.lerch_phi_1n(0.5, 0)


@pytest.mark.parametrize("nu", [0, 3, 11])
def test_large_argument_expansion_matches_mpmath(nu):
    for x in (specfun.HANKEL_MIN_X * 1.0001, 3e9, 1e11):
        ref_i = float(mp.log(mp.besseli(nu, x)) - x)
        ref_k = float(mp.besselk(nu, x) * mp.exp(x))
        assert specfun.log_bessel_i(nu, x, scaled=True) == pytest.approx(ref_i, abs=1e-13)
        assert specfun.bessel_k_scaled(nu, x) == pytest.approx(ref_k, rel=1e-13)
