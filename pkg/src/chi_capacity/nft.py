"""Soliton amplitude detection by the forward nonlinear Fourier transform.

Scattering problem
    ``v_t = [[-i zeta, q], [-conj(q), i zeta]] v``. Over one sample the
    potential is held constant and the exact matrix exponential
    ``cosh(k dt) I + sinh(k dt)/k P`` with ``k^2 = -zeta^2 - |q|^2`` is used.
    The product over the window, scaled by ``exp(i zeta T)``, gives the
    scattering coefficient ``a(zeta)``. A soliton of amplitude A contributes
    a zero at ``zeta = i A / 2``.

Root search
    ``a`` is scanned on the imaginary axis up to ``0.6`` times the peak
    field, a sign change of ``Re a`` brackets the root, and a complex secant
    iteration refines it. Noise pushes the eigenvalue slightly off the axis,
    which is why the refinement runs in the complex plane.

Campaign and validation
    Random pulse trains are propagated, each slot window is transformed,
    and the (sent, received) amplitude pairs are tested against the chi law
    and for memory via the normalised output correlation matrix.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
import scipy.fft as sfft
from scipy import stats

from . import channel, fiberlink, inputs, solitonsim
from .channel import ChannelSpec
from .errors import DomainError, NoEigenvalueError
from .fiberlink import FiberSystem
from .inputs import InputSpec
from .rng import max_workers, stream

SCAN_POINTS = 48
SIGMA_MAX_FACTOR = 0.6
PAIR_COLUMNS = ("run", "slot", "x_sent", "y_received", "status", "x_reference")


@dataclass(frozen=True)
class EigenAmplitude:
    amplitude: float
    residual: float
    eigenvalue: complex


@numba.njit(cache=True, nogil=True)
def _a_coefficient(q, dt, zeta):
    """Scaled ``a(zeta)`` for windows ``q[w, :]`` at points ``zeta[w, k]``."""
    nw, ns = q.shape
    nk = zeta.shape[1]
    out = np.empty((nw, nk), dtype=np.complex128)
    for w in range(nw):
        for k in range(nk):
            z = zeta[w, k]
            sc = cmath.exp(1j * z * dt)
            m11 = 1.0 + 0j
            m21 = 0.0 + 0j
            for j in range(ns):
                v = q[w, j]
                kap = cmath.sqrt(-z * z - (v.real * v.real + v.imag * v.imag))
                x = kap * dt
                ch = cmath.cosh(x)
                if abs(x) < 1e-4:
                    sh = dt * (1.0 + x * x / 6.0)
                else:
                    sh = cmath.sinh(x) / kap
                u11 = (ch - 1j * z * sh) * sc
                u12 = v * sh * sc
                u21 = -v.conjugate() * sh * sc
                u22 = (ch + 1j * z * sh) * sc
                m11, m21 = u11 * m11 + u12 * m21, u21 * m11 + u22 * m21
            out[w, k] = m11
    return out


def a_coefficient(samples, dt: float, zeta) -> np.ndarray:
    """``a(zeta)`` of one window (``samples`` 1-D) or of a stack of windows (2-D)."""
    q = np.atleast_2d(np.asarray(samples, dtype=np.complex128))
    z = np.asarray(zeta, dtype=np.complex128)
    zz = np.broadcast_to(z.reshape(1, -1) if z.ndim <= 1 else z, (q.shape[0], z.size if z.ndim <= 1 else z.shape[1]))
    out = _a_coefficient(np.ascontiguousarray(q), float(dt), np.ascontiguousarray(zz))
    if np.ndim(samples) == 1:
        out = out[0]
        return out[0] if z.ndim == 0 else out
    return out


def transfer_matrix(samples, dt: float, zeta: complex) -> np.ndarray:
    """Unscaled 2x2 transfer matrix of one window (used for unimodularity checks)."""
    m = np.eye(2, dtype=complex)
    for v in np.asarray(samples, dtype=complex):
        kap = np.sqrt(-zeta * zeta - abs(v) ** 2 + 0j)
        ch = np.cosh(kap * dt)
        sh = np.sinh(kap * dt) / kap if abs(kap * dt) > 1e-12 else dt
        u = np.array([[ch - 1j * zeta * sh, v * sh], [-np.conj(v) * sh, ch + 1j * zeta * sh]])
        m = u @ m
    return m


def _secant(q, dt, z0, z1, tol=1e-13, max_iter=60):
    """Vectorised complex secant on ``a``; converged entries are frozen."""
    f0 = _a_coefficient(q, dt, z0[:, None])[:, 0]
    f1 = _a_coefficient(q, dt, z1[:, None])[:, 0]
    active = np.ones(z0.size, dtype=bool)
    for _ in range(max_iter):
        den = f1 - f0
        step_ok = active & (den != 0) & (np.abs(f1) > 0)
        if not np.any(step_ok):
            break
        idx = np.flatnonzero(step_ok)
        dz = f1[idx] * (z1[idx] - z0[idx]) / den[idx]
        z0[idx], f0[idx] = z1[idx], f1[idx]
        z1[idx] = z1[idx] - dz
        f1[idx] = _a_coefficient(q[idx], dt, z1[idx, None])[:, 0]
        done = np.abs(dz) <= tol * np.maximum(np.abs(z1[idx]), 1e-3)
        active[idx[done]] = False
        active &= np.isfinite(z1)
    return z1, np.abs(f1), ~active


def extract_batch(windows, dt: float, sigma_min: float = 0.0, tol: float = 1e-13):
    """Amplitudes of the main eigenvalue in each row of ``windows``.

    Returns ``(amplitude, residual, status)``; ``amplitude`` is NaN where
    ``status`` is not ``"ok"``. Possible statuses: ``ok``, ``no_eigenvalue``,
    ``below_cutoff``, ``not_converged``.
    """
    q = np.ascontiguousarray(np.atleast_2d(windows), dtype=np.complex128)
    nw = q.shape[0]
    peak = np.max(np.abs(q), axis=1)
    amp = np.full(nw, np.nan)
    res = np.full(nw, np.nan)
    status = np.full(nw, "no_eigenvalue", dtype=object)
    live = peak > 0
    if not np.any(live):
        return amp, res, status
    lo = max(sigma_min, 1e-6)
    smax = SIGMA_MAX_FACTOR * peak
    live &= smax > lo
    idx = np.flatnonzero(live)
    u = np.linspace(0.0, 1.0, SCAN_POINTS)
    sig = lo + (smax[idx, None] - lo) * u[None, :]
    vals = _a_coefficient(q[idx], dt, 1j * sig.astype(complex)).real
    change = np.signbit(vals[:, :-1]) != np.signbit(vals[:, 1:])
    n_changes = change.sum(axis=1)
    if np.any(n_changes > 1):
        warnings.warn(f"{int(np.sum(n_changes > 1))} window(s) show more than one sign change; "
                      "keeping the largest root", RuntimeWarning, stacklevel=2)
    has = n_changes > 0
    # the soliton eigenvalue is the outermost one
    last = np.where(has, change.shape[1] - 1 - np.argmax(change[:, ::-1], axis=1), 0)
    rows = np.flatnonzero(has)
    if rows.size:
        wsel = idx[rows]
        z0 = 1j * sig[rows, last[rows]].astype(complex)
        z1 = 1j * sig[rows, last[rows] + 1].astype(complex)
        root, r, conv = _secant(q[wsel], dt, z0, z1, tol)
        a_hat = 2.0 * root.imag
        ok = conv & np.isfinite(root)
        status[wsel[~ok]] = "not_converged"
        below = ok & (root.imag < sigma_min)
        status[wsel[below]] = "below_cutoff"
        good = ok & ~below & (a_hat > 0)
        status[wsel[good]] = "ok"
        amp[wsel[good]] = a_hat[good]
        res[wsel] = r
    return amp, res, status


def extract_amplitude(frame: solitonsim.WaveformFrame, sigma_min: float = 0.0) -> EigenAmplitude:
    """Amplitude ``2 Im zeta`` of the single soliton in ``frame``."""
    amp, res, status = extract_batch(frame.samples[None, :], frame.dt, sigma_min)
    if status[0] != "ok":
        raise NoEigenvalueError(f"no discrete eigenvalue found ({status[0]})")
    z = 0.5j * amp[0]
    return EigenAmplitude(float(amp[0]), float(res[0]), complex(z))


def oversample(samples: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation by zero padding the spectrum (rows are frames)."""
    if factor == 1:
        return np.asarray(samples, dtype=complex)
    q = np.atleast_2d(samples)
    nt = q.shape[-1]
    spec = sfft.fft(q, axis=-1)
    out = np.zeros(q.shape[:-1] + (nt * factor,), dtype=complex)
    h = nt // 2
    out[..., :h] = spec[..., :h]
    out[..., -(nt - h):] = spec[..., h:]
    if nt % 2 == 0:  # split the Nyquist bin
        out[..., nt * factor - h] *= 0.5
        out[..., h] = out[..., nt * factor - h]
    res = sfft.ifft(out, axis=-1) * factor
    return res if np.ndim(samples) > 1 else res[0]


def slot_windows(samples: np.ndarray, dt: float, t0: float, n_slots: int, ts: float) -> np.ndarray:
    """Reshape frames ``(runs, nt)`` into slot windows ``(runs, n_slots, per_slot)``."""
    q = np.atleast_2d(samples)
    per = int(round(ts / dt))
    first = int(round((-0.5 * ts - t0) / dt))
    if first < 0 or first + n_slots * per > q.shape[-1]:
        raise DomainError("slot windows fall outside the frame")
    return q[:, first:first + n_slots * per].reshape(q.shape[0], n_slots, per)


# --------------------------------------------------------------------------- campaign

@dataclass(frozen=True)
class CampaignConfig:
    fiber: FiberSystem = field(default_factory=FiberSystem)
    power_dbm: float = -1.5
    symbol_rate_gbd: float = 1.7
    sample_period_ps: float = 4.6
    step_km: float = 0.1
    runs: int = 1000
    slots: int = 10
    guard: float = 2.0
    seed: int = 1
    oversample: int = 4
    noise: bool = True
    reference: bool = True
    reference_step_km: float | None = None
    x_hat: float = 0.0
    interaction_budget: float | None = None
    batch: int = 50

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fiber"] = self.fiber.to_dict()
        return d


@dataclass(frozen=True)
class CampaignGeometry:
    ts: float
    dt: float
    per_slot: int
    dz: float
    dz_reference: float
    z_total: float
    d_noise: float
    sigma_n_sq: float
    sigma_s_sq: float
    t0: float
    count: int


def geometry(cfg: CampaignConfig) -> CampaignGeometry:
    sc = fiberlink.derive_scales(cfg.fiber)
    ts = fiberlink.symbol_period_norm(cfg.fiber, cfg.symbol_rate_gbd)
    per_slot = max(2, int(round(ts / fiberlink.normalize_time(cfg.fiber, cfg.sample_period_ps))))
    dt = ts / per_slot
    dz = fiberlink.normalize_distance(cfg.fiber, cfg.step_km)
    steps = max(1, int(round(sc.z_norm / dz)))
    dz = sc.z_norm / steps
    ref_km = cfg.reference_step_km or cfg.step_km
    ref_steps = max(1, int(round(sc.z_norm / fiberlink.normalize_distance(cfg.fiber, ref_km))))
    t0, count = solitonsim.slot_grid(cfg.slots, ts, cfg.guard, dt)
    return CampaignGeometry(
        ts=ts, dt=dt, per_slot=per_slot, dz=dz, dz_reference=sc.z_norm / ref_steps,
        z_total=sc.z_norm, d_noise=sc.d_noise if cfg.noise else 0.0, sigma_n_sq=sc.sigma_n_sq,
        sigma_s_sq=fiberlink.power_to_sigma_s_sq(cfg.fiber, cfg.power_dbm, ts), t0=t0, count=count,
    )


def input_spec(cfg: CampaignConfig, geo: CampaignGeometry) -> InputSpec:
    if cfg.x_hat > 0:
        return InputSpec("truncated-rayleigh", geo.sigma_s_sq, x_hat=cfg.x_hat)
    return InputSpec("rayleigh", geo.sigma_s_sq)


def sent_amplitudes(cfg: CampaignConfig, geo: CampaignGeometry, run: int) -> np.ndarray:
    """Soliton amplitudes A = X^2 of one run (stream ``(seed, run, 1)``)."""
    x = inputs.sample(input_spec(cfg, geo), stream(cfg.seed, run, 1), cfg.slots)
    return x * x


def _extract_frames(q, geo: CampaignGeometry, cfg: CampaignConfig):
    up = oversample(q, cfg.oversample)
    win = slot_windows(up, geo.dt / cfg.oversample, geo.t0, cfg.slots, geo.ts)
    amp, _, status = extract_batch(win.reshape(-1, win.shape[-1]), geo.dt / cfg.oversample)
    return amp.reshape(q.shape[0], cfg.slots), status.reshape(q.shape[0], cfg.slots)


def _run_batch(cfg: CampaignConfig, geo: CampaignGeometry, runs: list[int]):
    amps = np.array([sent_amplitudes(cfg, geo, r) for r in runs])
    frames = []
    for a in amps:
        pc = solitonsim.PulseTrainConfig(tuple(a), geo.ts, guard=cfg.guard,
                                         interaction_budget=cfg.interaction_budget)
        frames.append(solitonsim.synthesize(pc, geo.dt).samples)
    q0 = np.array(frames)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=solitonsim.StabilityWarning)
        q = solitonsim.propagate_batch(q0, geo.dt, geo.z_total, geo.dz, geo.d_noise, cfg.seed, runs)
        y_amp, status = _extract_frames(q, geo, cfg)
        if cfg.reference:
            qr = solitonsim.propagate_batch(q0, geo.dt, geo.z_total, geo.dz_reference, 0.0, cfg.seed, runs)
            ref_amp, _ = _extract_frames(qr, geo, cfg)
        else:
            ref_amp = np.full_like(y_amp, np.nan)
    return amps, y_amp, status, ref_amp


def simulate_run(cfg: CampaignConfig, run: int):
    """Launched and received frames of one run, identical to the campaign's."""
    geo = geometry(cfg)
    pc = solitonsim.PulseTrainConfig(tuple(sent_amplitudes(cfg, geo, run)), geo.ts, guard=cfg.guard,
                                     interaction_budget=cfg.interaction_budget)
    sent = solitonsim.synthesize(pc, geo.dt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=solitonsim.StabilityWarning)
        received = solitonsim.propagate(sent, geo.z_total, geo.dz, geo.d_noise, cfg.seed, run)
    return sent, received


def campaign(cfg: CampaignConfig) -> list[dict]:
    """Simulate ``cfg.runs`` pulse trains and return one pair record per slot.

    Records hold ``run, slot, x_sent, y_received, status, x_reference`` where
    ``x = sqrt(A)``. ``x_reference`` is the amplitude detected after a
    noiseless propagation of the same waveform; it absorbs the deterministic
    distortion caused by pulse overlap. Failed detections have status other
    than ``ok`` and NaN amplitudes.
    """
    geo = geometry(cfg)
    batches = [list(range(s, min(s + cfg.batch, cfg.runs))) for s in range(0, cfg.runs, cfg.batch)]
    workers = min(max_workers(), len(batches)) or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda b: _run_batch(cfg, geo, b), batches))
    else:
        results = [_run_batch(cfg, geo, b) for b in batches]
    rows = []
    for runs, (amps, y_amp, status, ref_amp) in zip(batches, results):
        for i, r in enumerate(runs):
            for k in range(cfg.slots):
                rows.append({
                    "run": r, "slot": k,
                    "x_sent": math.sqrt(amps[i, k]),
                    "y_received": math.sqrt(y_amp[i, k]) if status[i, k] == "ok" else math.nan,
                    "status": status[i, k],
                    "x_reference": math.sqrt(ref_amp[i, k]) if np.isfinite(ref_amp[i, k]) and ref_amp[i, k] > 0 else math.nan,
                })
    return rows


# --------------------------------------------------------------------------- statistics

def correlation_matrix(y: np.ndarray) -> np.ndarray:
    """Normalised output correlation ``cov(Y_k, Y_k') / (E[Y_k] E[Y_k'])`` over runs (rows)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[0] < 2:
        raise DomainError("need a (runs, slots) array with at least two runs")
    mean = y.mean(axis=0)
    if np.any(mean == 0):
        raise DomainError("a slot has zero mean output; the normalisation is undefined")
    d = y - mean
    cov = d.T @ d / y.shape[0]
    return cov / np.outer(mean, mean)


def pairs_to_matrix(rows: list[dict], column: str = "y_received", fill: float = 0.0) -> np.ndarray:
    runs = max(r["run"] for r in rows) + 1
    slots = max(r["slot"] for r in rows) + 1
    out = np.full((runs, slots), fill)
    for r in rows:
        v = r[column]
        out[r["run"], r["slot"]] = v if np.isfinite(v) else fill
    return out


def energy_cutoff(ts: float, eps: float = 0.01) -> float:
    """Amplitude above which a sech pulse keeps a fraction ``1 - eps`` of its energy inside one slot.

    ``tanh(A ts / 2) = 1 - eps``.
    """
    return 2.0 * math.atanh(1.0 - eps) / ts


@dataclass
class FitResult:
    statistic: float
    p_value: float
    samples: int
    passed: bool
    bins: int


def pit_values(x, y, spec: ChannelSpec) -> np.ndarray:
    """Probability integral transform ``F(y | x)`` under the chi law."""
    return np.array([channel.cdf(spec, float(a), float(b)) for a, b in zip(x, y)])


def uniformity_test(u: np.ndarray, bins: int = 50, alpha: float = 0.01) -> FitResult:
    counts = np.histogram(u, bins=bins, range=(0.0, 1.0))[0]
    stat, p = stats.chisquare(counts)
    return FitResult(float(stat), float(p), int(u.size), bool(p >= alpha), bins)


def chi_law_fit(x, y, spec: ChannelSpec, bins: int = 50, alpha: float = 0.01) -> FitResult:
    """Chi-squared goodness of fit of pairs ``(x, y)`` to the channel law."""
    return uniformity_test(pit_values(x, y, spec), bins, alpha)


@dataclass
class ValidationReport:
    sigma_n_sq: float
    cutoff: float
    conditioned_on: str
    fit: FitResult
    fit_sent: FitResult | None
    bin_fits: list
    corr_max_offdiag: float
    corr_threshold: float
    corr_passed: bool
    failures: int
    total: int

    @property
    def passed(self) -> bool:
        return self.fit.passed and self.corr_passed and all(b["passed"] for b in self.bin_fits)


def validate_pairs(
    rows: list[dict],
    sigma_n_sq: float,
    n: int = 2,
    cutoff: float = 0.0,
    bins: int = 50,
    alpha: float = 0.01,
    corr_threshold: float = 0.05,
    min_bin: int = 200,
) -> ValidationReport:
    """Goodness of fit plus memory test for a pair list.

    The fit conditions on ``x_reference`` when present and uses only slots
    whose conditioning amplitude ``x**2`` is at least ``cutoff``. The same
    test conditioned on ``x_sent`` is reported as a diagnostic. Per-bin fits
    over conditioning-amplitude quantile bins with at least ``min_bin``
    samples are reported too.
    """
    spec = ChannelSpec(n, sigma_n_sq)
    y = np.array([r["y_received"] for r in rows], dtype=float)
    xs = np.array([r["x_sent"] for r in rows], dtype=float)
    xr = np.array([r.get("x_reference", math.nan) for r in rows], dtype=float)
    use_ref = np.any(np.isfinite(xr))
    xc = xr if use_ref else xs
    ok = np.isfinite(y) & np.isfinite(xc) & (xc > 0) & (xc * xc >= cutoff)
    u = pit_values(xc[ok], y[ok], spec)
    fit = uniformity_test(u, bins, alpha)
    fit_sent = None
    if use_ref:
        oks = np.isfinite(y) & (xs * xs >= cutoff)
        fit_sent = chi_law_fit(xs[oks], y[oks], spec, bins, alpha)
    bin_fits = []
    n_bins = int(ok.sum() // min_bin)
    if n_bins >= 1:
        a = (xc[ok]) ** 2
        edges = np.quantile(a, np.linspace(0, 1, n_bins + 1))
        which = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, n_bins - 1)
        for b in range(n_bins):
            sel = which == b
            ub = u[sel]
            fb = uniformity_test(ub, min(bins, max(5, ub.size // 20)), alpha / n_bins)
            bin_fits.append({"a_lo": float(edges[b]), "a_hi": float(edges[b + 1]), "samples": fb.samples,
                             "p_value": fb.p_value, "passed": fb.passed})
    ymat = pairs_to_matrix(rows)
    c = correlation_matrix(ymat)
    off = np.abs(c - np.diag(np.diag(c)))
    cmax = float(off.max()) if c.shape[0] > 1 else 0.0
    fails = int(sum(r["status"] != "ok" for r in rows))
    return ValidationReport(sigma_n_sq, cutoff, "x_reference" if use_ref else "x_sent", fit, fit_sent,
                            bin_fits, cmax, corr_threshold, cmax < corr_threshold, fails, len(rows))


# --------------------------------------------------------------------------- pair files

def write_pairs(rows: list[dict], fh, metadata: dict | None = None) -> None:
    for key, value in (metadata or {}).items():
        fh.write(f"# {key}: {value}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PAIR_COLUMNS)
    for r in rows:
        w.writerow([r["run"], r["slot"], repr(float(r["x_sent"])), repr(float(r["y_received"])),
                    r["status"], repr(float(r.get("x_reference", math.nan)))])


def read_pairs(fh) -> tuple[list[dict], dict]:
    meta, body = {}, []
    for line in fh:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(io.StringIO("".join(body)))
    missing = set(PAIR_COLUMNS[:5]) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"pair file lacks columns {sorted(missing)}")
    rows = []
    for rec in reader:
        rows.append({
            "run": int(rec["run"]), "slot": int(rec["slot"]),
            "x_sent": float(rec["x_sent"]), "y_received": float(rec["y_received"]),
            "status": rec["status"], "x_reference": float(rec.get("x_reference") or "nan"),
        })
    return rows, meta
