"""Mutual-information estimators for arbitrary input laws.

Deterministic route
    The output marginal ``p_Y`` and the conditional entropy are accumulated
    together on composite Gauss-Legendre tensor grids. Each x node only
    touches the y nodes inside its channel support window, so the cost is
    linear in the number of x nodes. Panel widths are tied to the noise
    standard deviation and halved until the rate changes by less than ``tol``.

Monte-Carlo route
    ``E[log2 p(Y|X) - log2 p_Y(Y)]`` over sampled pairs. ``p_Y`` is exact for
    Rayleigh and ASK inputs and otherwise read from a cubic spline of
    ``ln p_Y(y) - (2n-1) ln y`` (smooth down to y = 0) fitted on the
    deterministic grid. Samples are drawn in shards from independent
    streams and reduced in shard order, so results do not depend on the
    number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from . import channel, entropy, inputs
from .channel import ChannelSpec, log_density_array
from .errors import ConvergenceError, DomainError
from .inputs import InputSpec
from .quadrature import LOG2E, gl_panels, integrate
from .rng import max_workers, stream

DEFAULT_TOL = 1e-6
_WINDOW = 12.0
_CHUNK = 64


@dataclass(frozen=True)
class MIEstimate:
    value_bits: float
    std_error_bits: float
    method: str
    samples: int
    rho: float
    n: int
    input: InputSpec
    abs_error_bits: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)


@dataclass
class _Grid:
    y: np.ndarray
    wy: np.ndarray
    p_y: np.ndarray
    h_y_given_x: float  # nats


def _x_rule(inp: InputSpec, width: float, extra_breaks=()):
    if inp.is_discrete:
        pts = inputs.ask_points(inp.m, inp.sigma_s_sq)
        return pts, np.full(pts.size, 1.0 / pts.size)
    br = sorted(set(inputs.breakpoints(inp)) | {b for b in extra_breaks if b > 0})
    xn, xw = gl_panels(br, width)
    return xn, xw * inputs.density(inp, xn)


def _y_rule(spec: ChannelSpec, x_top: float, width: float):
    s = spec.sigma_n
    y_top = channel.support_window(spec, x_top, _WINDOW)[1]
    br = [0.0, 1e-3 * s, 1e-2 * s, 0.1 * s, y_top]
    return gl_panels(br, width)


def _accumulate(spec: ChannelSpec, xn, xw, y, wy) -> _Grid:
    """Marginal density on the y nodes and conditional entropy (nats)."""
    n, s2 = spec.n, spec.sigma_n_sq
    p_y = np.zeros_like(y)
    hyx = []
    order = np.argsort(xn)
    xn, xw = xn[order], xw[order]
    keep = xw > 0
    xn, xw = xn[keep], xw[keep]
    for start in range(0, xn.size, _CHUNK):
        xs = xn[start:start + _CHUNK]
        ws = xw[start:start + _CHUNK]
        lo = channel.support_window(spec, float(xs[0]), _WINDOW)[0]
        hi = channel.support_window(spec, float(xs[-1]), _WINDOW)[1]
        i0, i1 = np.searchsorted(y, [lo, hi])
        L = log_density_array(n, s2, xs[None, :], y[i0:i1, None])
        P = np.exp(L)
        p_y[i0:i1] += P @ ws
        PL = np.where(P > 0, P * L, 0.0)
        hyx.append(-float(ws @ (wy[i0:i1] @ PL)))
    return _Grid(y=y, wy=wy, p_y=p_y, h_y_given_x=math.fsum(hyx))


def _entropy_of(p, w) -> float:
    pos = p > 0
    return -float(np.sum(w[pos] * p[pos] * np.log(p[pos])))


def _rayleigh_log_py(spec: ChannelSpec, inp: InputSpec, y):
    """Analytic output log-density for a Rayleigh input on a general-noise channel."""
    s = spec.sigma_n
    rho = inp.sigma_s_sq / spec.sigma_n_sq
    return entropy.log_output_density_rayleigh(spec.n, rho, np.asarray(y) / s) - math.log(s)


def _grid(spec, inp, level: int, extra_breaks=()):
    h = 0.5 / 2**level
    s = spec.sigma_n
    width = h * s
    xn, xw = _x_rule(inp, h * min(s, math.sqrt(inp.sigma_s_sq)), extra_breaks)
    top = float(np.max(xn)) if xn.size else 0.0
    y, wy = _y_rule(spec, max(top, inputs.upper_support(inp)), width)
    return _accumulate(spec, xn, xw, y, wy)


def _rate_nats(spec, inp, g: _Grid) -> float:
    if inp.kind == "rayleigh":
        lp = _rayleigh_log_py(spec, inp, g.y)
        p = np.exp(lp)
        h_y = -float(np.sum(g.wy * np.where(p > 0, p * lp, 0.0)))
    else:
        h_y = _entropy_of(g.p_y, g.wy)
    return h_y - g.h_y_given_x


def _refine(spec, inp, tol, extra_breaks=(), max_level=4):
    prev_rate = None
    for level in range(max_level + 1):
        g = _grid(spec, inp, level, extra_breaks)
        rate = _rate_nats(spec, inp, g) * LOG2E
        if prev_rate is not None and abs(rate - prev_rate) <= tol:
            return rate, abs(rate - prev_rate), g
        prev_rate = rate
    raise ConvergenceError(f"tensor quadrature did not settle to {tol} bits")


def _rho(spec, inp):
    return inp.sigma_s_sq / spec.sigma_n_sq


def mi_quadrature(spec: ChannelSpec, inp: InputSpec, tol: float = DEFAULT_TOL) -> MIEstimate:
    """Deterministic mutual information in bits for a continuous input."""
    if inp.is_discrete:
        raise DomainError("mi_quadrature handles continuous inputs; use mi_ask for ASK")
    value, err, _ = _refine(spec, inp, tol)
    return MIEstimate(value, 0.0, "quadrature", 0, _rho(spec, inp), spec.n, inp, abs_error_bits=err)


def mi_ask(spec: ChannelSpec, m_points: int, sigma_s_sq: float, tol: float = DEFAULT_TOL) -> MIEstimate:
    """Mutual information of equiprobable M-ASK; the zero point uses the central chi law."""
    inp = InputSpec("ask", sigma_s_sq, m=m_points)
    if m_points == 1:
        return MIEstimate(0.0, 0.0, "ask_quadrature", 0, _rho(spec, inp), spec.n, inp)
    value, err, _ = _refine(spec, inp, tol)
    return MIEstimate(value, 0.0, "ask_quadrature", 0, _rho(spec, inp), spec.n, inp, abs_error_bits=err)


def output_log_density(spec: ChannelSpec, inp: InputSpec, level: int = 1):
    """Callable ``y -> ln p_Y(y)`` (vectorised).

    Exact for Rayleigh and ASK, spline-interpolated otherwise.
    """
    n, s2 = spec.n, spec.sigma_n_sq
    if inp.kind == "rayleigh":
        return lambda y: _rayleigh_log_py(spec, inp, y)
    if inp.is_discrete:
        pts = inputs.ask_points(inp.m, inp.sigma_s_sq)

        def ask_log_py(y):
            y = np.asarray(y, dtype=float)
            L = log_density_array(n, s2, pts[:, None], y[None, :])
            return special.logsumexp(L, axis=0) - math.log(pts.size)

        return ask_log_py
    g = _grid(spec, inp, level)
    ok = g.p_y > 1e-300
    yk = g.y[ok]
    vals = np.log(g.p_y[ok]) - (2 * n - 1) * np.log(yk)
    spl = interpolate.CubicSpline(yk, vals, extrapolate=False)
    y_lo, y_hi = yk[0], yk[-1]
    slope_hi = float(spl(y_hi, 1))
    v_lo, v_hi = vals[0], vals[-1]

    def table_log_py(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(y < y_lo, v_lo, np.where(y > y_hi, v_hi + slope_hi * (y - y_hi),
                                                      spl(np.clip(y, y_lo, y_hi))))
            return out + (2 * n - 1) * np.log(y)

    return table_log_py


def _mc_shard(spec, inp, log_py, seed, shard, size):
    rng = stream(seed, shard)
    x = inputs.sample(inp, rng, size)
    y = channel.sample(spec, x, rng)
    d = (log_density_array(spec.n, spec.sigma_n_sq, x, y) - log_py(y)) * LOG2E
    mean = float(np.mean(d))
    m2 = float(np.sum((d - mean) ** 2))
    return size, mean, m2


def mi_monte_carlo(
    spec: ChannelSpec,
    inp: InputSpec,
    samples: int = 10**6,
    seed: int = 0,
    shard_size: int = 1 << 16,
) -> MIEstimate:
    """Monte-Carlo mutual information in bits with its standard error."""
    if samples < 1000:
        raise DomainError("at least 1000 samples are required")
    log_py = output_log_density(spec, inp)
    sizes = [shard_size] * (samples // shard_size)
    if samples % shard_size:
        sizes.append(samples % shard_size)
    workers = min(max_workers(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _mc_shard(spec, inp, log_py, seed, *a), enumerate(sizes)))
    else:
        parts = [_mc_shard(spec, inp, log_py, seed, k, s) for k, s in enumerate(sizes)]
    # pairwise (Chan et al.) combination in shard order
    count, mean, m2 = 0, 0.0, 0.0
    for c, mu, q in parts:
        tot = count + c
        delta = mu - mean
        mean += delta * c / tot
        m2 += q + delta * delta * count * c / tot
        count = tot
    std_err = math.sqrt(m2 / (count - 1) / count)
    return MIEstimate(mean, std_err, "monte_carlo", count, _rho(spec, inp), spec.n, inp)


def rate_loss_truncated(
    spec: ChannelSpec, sigma_s_sq: float, x_hat: float, tol: float = DEFAULT_TOL
) -> float:
    """Rayleigh rate minus truncated-Rayleigh rate, in bits.

    Both rates are evaluated on a common grid (the truncation point is a
    breakpoint of both) so that their shared discretisation error cancels.
    """
    if x_hat < 0:
        raise DomainError("x_hat must be non-negative")
    if x_hat == 0:
        return 0.0
    full = InputSpec("rayleigh", sigma_s_sq)
    trunc = InputSpec("truncated-rayleigh", sigma_s_sq, x_hat=x_hat)
    i_full = _refine(spec, full, tol, extra_breaks=(x_hat,))[0]
    i_trunc = _refine(spec, trunc, tol)[0]
    return i_full - i_trunc


def output_kl_truncated(spec: ChannelSpec, sigma_s_sq: float, x_hat: float, level: int = 1) -> float:
    """``D(p_Yt || p_Y)`` in bits between truncated- and full-Rayleigh output laws."""
    trunc = InputSpec("truncated-rayleigh", sigma_s_sq, x_hat=x_hat)
    g = _grid(spec, trunc, level)
    lp_full = _rayleigh_log_py(spec, InputSpec("rayleigh", sigma_s_sq), g.y)
    pos = g.p_y > 0
    p = g.p_y[pos]
    return float(np.sum(g.wy[pos] * p * (np.log(p) - lp_full[pos]))) * LOG2E


def g_quadrature(spec: ChannelSpec, x: float, rel_tol: float = 1e-11) -> float:
    """Differential entropy of the channel law at input ``x`` (bits); x = 0 allowed."""
    if x < 0:
        raise DomainError("x must be non-negative")
    n, s2 = spec.n, spec.sigma_n_sq
    lo, hi = channel.support_window(spec, x, _WINDOW)
    centre = math.sqrt(x * x + n * s2)

    def f(y):
        lp = float(log_density_array(n, s2, x, y))
        return -math.exp(lp) * lp if math.isfinite(lp) else 0.0

    return integrate(f, lo, hi, rel_tol=rel_tol, abs_tol=1e-14, points=[centre]) * LOG2E


def g_bounds(spec: ChannelSpec, x: float) -> tuple[float, float]:
    """Analytic bracket ``(lower, upper)`` on the channel-law entropy at ``x`` (bits).

    The upper bound is the cross entropy against ``(2/sqrt(pi)) exp(-y^2)``.
    The lower bound combines the log-concave entropy bound for the
    chi-squared variable ``Z = 2Y^2/s2`` with Jensen's inequality on
    ``E[ln Z]`` and the Jacobian of the change of variables.
    """
    if x < 0:
        raise DomainError("x must be non-negative")
    n, s2 = spec.n, spec.sigma_n_sq
    upper = x * x + n * s2 + math.log(math.sqrt(math.pi) / 2.0)
    lower = 0.5 * math.log((2 * x * x + n * s2) / (x * x + n * s2)) + 0.5 * math.log(s2)
    return lower * LOG2E, upper * LOG2E
