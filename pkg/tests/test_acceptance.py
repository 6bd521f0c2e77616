"""Acceptance gate: one test per primary criterion, each printing a verdict line.

The full-scale soliton campaign runs by default (about a quarter of an hour
on one core). The long-haul and high-power variants run only when
``CHI_CAPACITY_LINK_VARIANTS=1``.
"""

import math
import os

import numpy as np
import pytest
from scipy import stats

from _oracles import cond_entropy_direct, g_direct
from chi_capacity import channel, entropy, mi, nft, solitonsim
from chi_capacity.channel import ChannelSpec
from chi_capacity.fiberlink import FiberSystem
from chi_capacity.inputs import InputSpec
from chi_capacity.rng import stream
from chi_capacity.solitonsim import WaveformFrame

LOG2E = 1 / math.log(2)


def db(v):
    return 10 ** (v / 10)


def test_headline_rates(verdicts):
    spec = ChannelSpec(2)
    hg = mi.mi_quadrature(spec, InputSpec("half-gaussian", db(25))).value_bits
    ask = mi.mi_ask(spec, 16, db(25)).value_bits
    ok = abs(hg - 3.68) <= 0.05 and abs(ask - 3.45) <= 0.05
    verdicts.record("headline rates", ok, f"half-Gaussian {hg:.4f} bits (target 3.68), 16-ASK {ask:.4f} bits "
                                          f"(target 3.45), tolerance 0.05")
    assert ok


def test_conditional_entropy_oracle_equivalence(verdicts):
    worst = 0.0
    for n in (1, 2, 3):
        for rho in (1.0, 10.0, 100.0):
            worst = max(worst, abs(entropy.cond_entropy_closed_form(n, rho) - cond_entropy_direct(n, rho)))
    ok = worst <= 1e-6
    verdicts.record("conditional entropy closed form vs 2-D quadrature", ok,
                    f"max |diff| = {worst:.2e} bits over 9 points (limit 1e-6)")
    assert ok


RHOS = (1e2, 1e3, 1e4, 1e5)


def test_mutual_information_asymptote(verdicts):
    lines, ok = [], True
    for n in (1, 2, 3):
        gaps = [entropy.rayleigh_mi(n, r).mi_bits - entropy.mi_asymptote(r) for r in RHOS]
        mags = np.abs(gaps)
        decreasing = bool(np.all(np.diff(mags) < 0))
        k_fit = float(np.max(mags * np.array(RHOS)))
        last_ok = mags[-1] <= 1e-3
        ok &= decreasing and last_ok
        lines.append(f"n={n} gaps {', '.join(f'{g:+.2e}' for g in gaps)} decreasing={decreasing} "
                     f"K={k_fit:.3g}")
    slope = entropy.rayleigh_mi(2, 4e4).mi_bits - entropy.rayleigh_mi(2, 1e4).mi_bits
    slope_ok = abs(slope - 1.0) <= 1e-2
    ok &= slope_ok
    verdicts.record("mutual information asymptote", ok, "; ".join(lines) + f"; MI(4e4)-MI(1e4) = {slope:.5f}")
    assert ok


def test_output_entropy_asymptote(verdicts):
    lines, ok = [], True
    for n in (1, 2, 3):
        gaps = np.array([entropy.output_entropy_exact(n, r) - entropy.output_entropy_asymptotic(r) for r in RHOS])
        c_fit = float(np.max(np.abs(gaps) * np.array(RHOS)))
        bound_ok = all(entropy.h4_correction(n, r) * LOG2E <= entropy.h4_bound_bits(n, r) for r in RHOS)
        ok &= bound_ok and math.isfinite(c_fit)
        lines.append(f"n={n} C'={c_fit:.3g} correction bound holds={bound_ok}")
    verdicts.record("output entropy asymptote", ok, "; ".join(lines))
    assert ok


def test_rayleigh_curves_close_across_n(verdicts):
    vals = {n: entropy.rayleigh_mi(n, db(30)).mi_bits for n in (1, 2, 3, 12)}
    band = max(vals.values()) - min(vals.values())
    ok = band <= 0.06
    verdicts.record("Rayleigh MI band at 30 dB", ok,
                    ", ".join(f"n={n}: {v:.4f}" for n, v in vals.items()) + f"; band {band:.4f} (limit 0.06)")
    assert ok


def _mc(n, inp, seed):
    return mi.mi_monte_carlo(ChannelSpec(n), inp, samples=10**6, seed=seed)


def _above(a, b):
    """``a`` exceeds ``b`` with non-overlapping three-sigma error bars."""
    return a.value_bits - 3 * a.std_error_bits > b.value_bits + 3 * b.std_error_bits


def test_input_orderings(verdicts):
    results, ok = [], True
    for n in (1, 2, 3):
        geo = _mc(n, InputSpec("geometric", db(0)), 100 + n)
        hg0 = _mc(n, InputSpec("half-gaussian", db(0)), 200 + n)
        hg = _mc(n, InputSpec("half-gaussian", db(25)), 300 + n)
        ray = _mc(n, InputSpec("rayleigh", db(25)), 400 + n)
        mb = _mc(n, InputSpec("maxwell-boltzmann", db(25)), 500 + n)
        ook = _mc(n, InputSpec("ask", db(-5), m=2), 600 + n)
        hg5 = _mc(n, InputSpec("half-gaussian", db(-5)), 700 + n)
        checks = {
            "geometric>half-Gaussian@0dB": (_above(geo, hg0), geo, hg0),
            "half-Gaussian>Rayleigh@25dB": (_above(hg, ray), hg, ray),
            "Rayleigh>Maxwell-Boltzmann@25dB": (_above(ray, mb), ray, mb),
            "OOK>half-Gaussian@-5dB": (_above(ook, hg5), ook, hg5),
        }
        for name, (passed, a, b) in checks.items():
            ok &= passed
            results.append(f"n={n} {name} {'yes' if passed else 'NO'} ({a.value_bits:.4f}+-{a.std_error_bits:.1e} "
                           f"vs {b.value_bits:.4f}+-{b.std_error_bits:.1e})")
    verdicts.record("input orderings", ok, "; ".join(results))
    assert ok


def test_channel_sampler_goodness_of_fit(verdicts):
    worst, ok = 1.0, True
    for n in (1, 2, 3):
        spec = ChannelSpec(n, 1.0)
        for x in (0.5, 2.0, 10.0):
            edges = [channel.quantile(spec, x, k / 50) for k in range(1, 50)]
            y = channel.sample(spec, x, stream(77, n, int(10 * x)), 10**5)
            counts = np.bincount(np.searchsorted(edges, y), minlength=50)
            p = stats.chisquare(counts).pvalue
            worst = min(worst, p)
            ok &= p >= 0.01
    verdicts.record("channel sampler vs law", ok, f"smallest chi-square p-value {worst:.3f} over 9 cases")
    assert ok


def test_truncation_rate_loss(verdicts):
    spec = ChannelSpec(2, 1.0)
    grid = (0, 10, 20, 30)
    losses = [mi.rate_loss_truncated(spec, db(s), 0.5) for s in grid]
    decreasing = all(a > b for a, b in zip(losses, losses[1:]))
    kl_ok = all(mi.output_kl_truncated(spec, db(s), 0.5) <= 0.25 / db(s) * LOG2E for s in grid)
    brackets = []
    for x in (0.1, 1.0, 5.0):
        lo, hi = mi.g_bounds(spec, x)
        g = mi.g_quadrature(spec, x)
        brackets.append(lo <= g <= hi and abs(g - g_direct(spec, x)) < 1e-8)
    ok = decreasing and kl_ok and all(brackets)
    verdicts.record("truncated-input rate loss", ok,
                    f"losses {', '.join(f'{v:.3e}' for v in losses)} decreasing={decreasing}; "
                    f"KL bound holds={kl_ok}; entropy brackets hold={brackets}")
    assert ok


def test_simulator_physics(verdicts):
    dt = 0.01
    t = np.arange(-20, 20, dt)
    frame = WaveformFrame(dt, 1 / np.cosh(t), float(t[0]))
    out = solitonsim.propagate(frame, 10.0, 1e-3, 0.0).samples
    expected = frame.samples * np.exp(0.5j * 10.0)
    amp_err = float(np.max(np.abs(np.abs(out) - np.abs(expected))))
    phase_err = float(abs(np.angle(np.vdot(expected, out))))
    coarse = WaveformFrame(0.05, 1 / np.cosh(np.arange(-20, 20, 0.05)), -20.0)
    ref = solitonsim.propagate(coarse, 4.0, 1.25e-4, 0.0).samples
    errs = [np.max(np.abs(solitonsim.propagate(coarse, 4.0, h, 0.0).samples - ref)) for h in (0.04, 0.02, 0.01)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ts = np.arange(-7.5, 7.5, 0.005)
    amp = nft.extract_amplitude(WaveformFrame(0.005, 2 / np.cosh(2 * ts), float(ts[0]))).amplitude
    ok = amp_err <= 1e-6 and phase_err <= 1e-4 and all(3.5 < r < 4.5 for r in ratios) and abs(amp / 2 - 1) <= 1e-4
    verdicts.record("simulator physics", ok,
                    f"amplitude error {amp_err:.2e}, phase error {phase_err:.2e} rad, dz-halving ratios "
                    f"{ratios[0]:.2f}/{ratios[1]:.2f}, clean-sech amplitude error {abs(amp / 2 - 1):.2e}")
    assert ok


def _campaign_verdict(verdicts, label, cfg):
    geo = nft.geometry(cfg)
    rows = nft.campaign(cfg)
    rep = nft.validate_pairs(rows, geo.sigma_n_sq, n=2, cutoff=nft.energy_cutoff(geo.ts))
    ok = rep.passed
    sent = rep.fit_sent.p_value if rep.fit_sent is not None else float("nan")
    verdicts.record(label, ok,
                    f"fit p = {rep.fit.p_value:.3f} ({rep.fit.samples} slots conditioned on {rep.conditioned_on}); "
                    f"{sum(b['passed'] for b in rep.bin_fits)}/{len(rep.bin_fits)} amplitude bins pass; "
                    f"max |offdiag| = {rep.corr_max_offdiag:.4f} (limit 0.05); "
                    f"{rep.failures}/{rep.total} slots without eigenvalue; "
                    f"diagnostic fit against launched amplitudes p = {sent:.3g}")
    return ok, rows


@pytest.mark.slow
def test_soliton_link_reproduction(verdicts):
    ok, _ = _campaign_verdict(verdicts, "soliton link reproduction (500 km, -1.5 dBm)", nft.CampaignConfig())
    assert ok


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("CHI_CAPACITY_LINK_VARIANTS") != "1",
                    reason="set CHI_CAPACITY_LINK_VARIANTS=1 for the long-haul and high-power variants")
@pytest.mark.parametrize("distance_km,power_dbm", [(2000.0, -1.5), (500.0, 1.45), (2000.0, 1.45)])
def test_soliton_link_variants(verdicts, distance_km, power_dbm):
    cfg = nft.CampaignConfig(fiber=FiberSystem(distance_km=distance_km), power_dbm=power_dbm)
    ok, _ = _campaign_verdict(verdicts, f"soliton link variant ({distance_km:g} km, {power_dbm:g} dBm)", cfg)
    assert ok
