import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from _oracles import cond_entropy_direct, output_entropy_direct
from chi_capacity import channel, entropy, inputs, mi
from chi_capacity.channel import ChannelSpec
from chi_capacity.errors import DomainError
from chi_capacity.inputs import InputSpec

HALF_LOG_PI_E = 0.5 * math.log2(math.pi * math.e)


def test_alpha_identity():
    for rho in (1e-3, 0.7, 1.0, 10.0, 1e6):
        assert entropy.alpha_of(rho) * (rho + 1) == pytest.approx(rho, rel=1e-15)


def test_f_n_trapezoid_oracle():
    # frozen from a 1e7-point trapezoid rule on [0, 200] with scipy iv/kv
    assert entropy.f_n_integral(2, 1.0) == pytest.approx(0.9904692472493136, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_f_n_large_rho_law(n):
    rho = 1e5
    fn = entropy.f_n_integral(n, rho)
    assert fn / (2 * rho**2) == pytest.approx(1.0, abs=1e-2)
    sub = 0.5 * (-math.log(rho) + 1 - math.log(4 * math.pi) + 0.5772156649015329)
    assert (fn - 2 * rho**2) / rho == pytest.approx(sub, rel=0.05)


def test_f_n_tolerance_stability():
    a = entropy.f_n_integral(2, 1e4, tol=1e-10)
    b = entropy.f_n_integral(2, 1e4, tol=1e-13)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(DomainError):
        entropy.f_n_integral(2, 1.0, tol=1e-2)


@pytest.mark.parametrize("n,rho", [(1, 1.0), (2, 10.0), (3, 100.0)])
def test_cond_entropy_matches_direct_quadrature(n, rho):
    assert entropy.cond_entropy_closed_form(n, rho) == pytest.approx(cond_entropy_direct(n, rho), abs=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cond_entropy_high_snr_limit(n):
    assert entropy.cond_entropy_closed_form(n, 1e6) == pytest.approx(HALF_LOG_PI_E, abs=1e-2)


def test_cond_entropy_n_independence():
    a = entropy.cond_entropy_closed_form(1, 1e4)
    b = entropy.cond_entropy_closed_form(12, 1e4)
    assert abs(a - b) <= 1e-2


def test_cond_entropy_noise_scaling():
    base = entropy.cond_entropy_closed_form(2, 5.0)
    assert entropy.cond_entropy_closed_form(2, 5.0, sigma_n_sq=4.0) == pytest.approx(base + 1.0, abs=1e-12)


def test_output_density_normalisation():
    f = lambda y: entropy.output_density_rayleigh(3, 5.0, y)
    total = integrate.quad(f, 0, 8, epsrel=1e-13)[0] + integrate.quad(f, 8, 40, epsrel=1e-13)[0]
    assert total == pytest.approx(1.0, abs=1e-10)


def test_output_density_marginalisation():
    n, rho = 2, 2.0
    spec = ChannelSpec(n, 1.0)
    inp = InputSpec("rayleigh", rho)
    for y in np.linspace(0.1, 6.0, 20):
        ref = integrate.quad(lambda x: inputs.density(inp, x) * channel.channel_density(spec, x, y),
                             1e-12, 15, epsrel=1e-12, limit=200)[0]
        assert entropy.output_density_rayleigh(n, rho, y) == pytest.approx(ref, rel=1e-9)


def test_output_second_moment():
    f = lambda y: y * y * entropy.output_density_rayleigh(2, 10.0, y)
    m2 = integrate.quad(f, 0, 10, epsrel=1e-13)[0] + integrate.quad(f, 10, 60, epsrel=1e-13)[0]
    assert m2 == pytest.approx(12.0, rel=1e-10)


def test_output_density_large_rho_finite():
    v = entropy.log_output_density_rayleigh(3, 1e6, np.array([0.0, 1e-3, 10.0, 3e3]))
    assert v[0] == -math.inf
    assert np.all(np.isfinite(v[1:]))


def test_output_entropy_direct_oracle():
    n, rho = 3, 7.0
    ref = output_entropy_direct(lambda y: entropy.log_output_density_rayleigh(n, rho, y), 0.0, 40.0, [1, 3, 6, 12])
    assert entropy.output_entropy_exact(n, rho) == pytest.approx(ref, abs=1e-8)


def test_h4_bound_and_n1_case():
    assert entropy.h4_correction(1, 50.0) == 0.0
    h4 = entropy.h4_correction(3, 100.0) * entropy.LOG2E
    assert 0 < h4 <= entropy.h4_bound_bits(3, 100.0)


def test_output_entropy_asymptotic_rho1():
    ref = (1 + 0.5 * 0.5772156649015329) / math.log(2) - 1
    assert entropy.output_entropy_asymptotic(1.0) == pytest.approx(ref, rel=1e-15)


def test_output_entropy_gap_decay():
    g3 = abs(entropy.output_entropy_exact(2, 1e3) - entropy.output_entropy_asymptotic(1e3))
    g4 = abs(entropy.output_entropy_exact(2, 1e4) - entropy.output_entropy_asymptotic(1e4))
    assert g3 >= g4
    assert g3 <= 10 / 1e3 / math.log(2)
    assert g4 <= 10 / 1e4 / math.log(2)


def test_output_entropy_n_independence():
    assert abs(entropy.output_entropy_exact(1, 1e4) - entropy.output_entropy_exact(3, 1e4)) <= 1e-2


@pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
def test_mi_asymptote_consistency(rho):
    diff = entropy.output_entropy_asymptotic(rho) - HALF_LOG_PI_E
    assert entropy.mi_asymptote(rho) == pytest.approx(diff, abs=1e-14)


def test_mi_asymptote_value_and_slope():
    rho = 10**2.5
    assert entropy.mi_asymptote(rho) == pytest.approx(3.465, abs=1e-3)
    assert entropy.rayleigh_mi(2, rho).mi_bits - entropy.mi_asymptote(rho) == pytest.approx(0.0, abs=10 / rho)


@settings(max_examples=25, deadline=None)
@given(log_rho=st.floats(-3, 8))
def test_mi_asymptote_half_log_slope(log_rho):
    rho = 10.0**log_rho
    assert entropy.mi_asymptote(4 * rho) - entropy.mi_asymptote(rho) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("snr_db", [0, 10, 25])
def test_closed_form_mi_matches_monte_carlo(n, snr_db):
    rho = 10 ** (snr_db / 10)
    exact = entropy.rayleigh_mi(n, rho).mi_bits
    est = mi.mi_monte_carlo(ChannelSpec(n), InputSpec("rayleigh", rho), samples=200_000, seed=n + snr_db)
    assert abs(exact - est.value_bits) <= 3 * est.std_error_bits


def test_report_fields():
    rep = entropy.rayleigh_mi(2, 10.0)
    assert rep.mi_bits == pytest.approx(rep.h_y_bits - rep.h_y_given_x_bits)
    assert rep.method == "closed_form"
    asym = entropy.asymptotic_report(2, 10.0)
    assert asym.h_y_given_x_bits == pytest.approx(HALF_LOG_PI_E)


def test_domain_errors():
    with pytest.raises(DomainError):
        entropy.cond_entropy_closed_form(0, 1.0)
    with pytest.raises(DomainError):
        entropy.cond_entropy_closed_form(2, -1.0)
    with pytest.raises(DomainError):
        entropy.mi_asymptote(0.0)
