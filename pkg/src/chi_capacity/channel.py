"""The noncentral chi channel with 2n degrees of freedom.

Given the transmitted amplitude ``x`` the received amplitude ``y`` satisfies

    y**2 = 0.5 * sum_{i=1}^{2n} (x / sqrt(n) + N_i)**2,   N_i ~ N(0, sigma_n_sq),

whose density is

    p(y|x) = 2/s2 * y**n / x**(n-1) * exp(-(x**2 + y**2)/s2) * I_{n-1}(2xy/s2).

All densities are evaluated in the log domain. The Bessel factor is taken in
scaled form so that ``-(x**2+y**2)/s2 + 2xy/s2`` collapses analytically to
``-(x-y)**2/s2``; this keeps the evaluation exact for x, y of order 1e3 and
beyond.

At ``x = 0`` the formula above is singular for ``n >= 2``. The public density
requires ``x > 0``; the vectorised internal evaluator substitutes the central
chi limit ``2 y**(2n-1) exp(-y**2/s2) / (s2**n Gamma(n))`` there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError
from .quadrature import integrate
from .specfun import log_bessel_i


@dataclass(frozen=True)
class ChannelSpec:
    n: int
    sigma_n_sq: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not (self.sigma_n_sq > 0 and math.isfinite(self.sigma_n_sq)):
            raise DomainError(f"sigma_n_sq must be positive, got {self.sigma_n_sq!r}")

    @property
    def sigma_n(self) -> float:
        return math.sqrt(self.sigma_n_sq)


def log_density_array(n: int, s2: float, x, y) -> np.ndarray:
    """ln p(y|x), broadcasting over x >= 0 and y >= 0 (x = 0 is the central limit)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.full(x.shape, -np.inf)
    pos = y > 0
    xpos = pos & (x > 0)
    if np.any(xpos):
        xs, ys = x[xpos], y[xpos]
        z = 2.0 * xs * ys / s2
        out[xpos] = (
            math.log(2.0 / s2)
            + n * np.log(ys)
            - (n - 1) * np.log(xs)
            - (xs - ys) ** 2 / s2
            + log_bessel_i(n - 1, z, scaled=True)
        )
    x0 = pos & (x == 0)
    if np.any(x0):
        ys = y[x0]
        out[x0] = (
            math.log(2.0)
            - n * math.log(s2)
            + (2 * n - 1) * np.log(ys)
            - ys**2 / s2
            - special.gammaln(n)
        )
    return out


def log_channel_density(spec: ChannelSpec, x, y):
    """ln p_{Y|X}(y|x) for x > 0, y >= 0; ``-inf`` at y = 0."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("the channel density requires x > 0; use log_central_density for x = 0")
    if np.any(ya < 0):
        raise DomainError("received amplitude must be non-negative")
    out = log_density_array(spec.n, spec.sigma_n_sq, xa, ya)
    return float(out) if out.ndim == 0 else out


def channel_density(spec: ChannelSpec, x, y):
    return np.exp(log_channel_density(spec, x, y))


def log_central_density(spec: ChannelSpec, y):
    """The x -> 0 limit of the channel law (central chi, 2n degrees of freedom)."""
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise DomainError("received amplitude must be non-negative")
    out = log_density_array(spec.n, spec.sigma_n_sq, np.zeros_like(ya), ya)
    return float(out) if out.ndim == 0 else out


def second_moment(spec: ChannelSpec, x) -> float:
    """E[Y^2 | X = x]."""
    return np.asarray(x, dtype=float) ** 2 + spec.n * spec.sigma_n_sq


def sample(spec: ChannelSpec, x, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw received amplitudes through the 2n-Gaussian input-output relation.

    ``x`` broadcasts against ``size``; ``x = 0`` is allowed (central chi).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("transmitted amplitude must be non-negative")
    shape = np.broadcast_shapes(x.shape, () if size is None else tuple(np.atleast_1d(size)))
    noise = rng.standard_normal(shape + (2 * spec.n,)) * spec.sigma_n
    shifted = x[..., None] / math.sqrt(spec.n) + noise
    return np.sqrt(0.5 * np.sum(shifted * shifted, axis=-1))


def support_window(spec: ChannelSpec, x: float, width: float = 12.0) -> tuple[float, float]:
    """Interval of y outside which p(.|x) is below exp(-width**2) relative to its peak."""
    s = spec.sigma_n
    centre = math.sqrt(x * x + spec.n * spec.sigma_n_sq)
    half = width * s + math.sqrt(spec.n) * s
    return max(0.0, centre - half), centre + half


def cdf(spec: ChannelSpec, x: float, y: float, rel_tol: float = 1e-12) -> float:
    """P(Y <= y | X = x) by adaptive quadrature of the density."""
    lo, hi = support_window(spec, x)
    if y <= lo:
        return 0.0
    top = min(y, hi)
    centre = math.sqrt(x * x + spec.n * spec.sigma_n_sq)

    def f(t):
        return math.exp(log_density_array(spec.n, spec.sigma_n_sq, x, t))

    value = integrate(f, lo, top, rel_tol=rel_tol, abs_tol=1e-15, points=[centre])
    return min(1.0, value)


def quantile(spec: ChannelSpec, x: float, p: float, tol: float = 1e-10) -> float:
    """Inverse of :func:`cdf` by bracketing root search."""
    if not (0.0 < p < 1.0):
        raise DomainError("quantile level must lie in (0, 1)")
    lo, hi = support_window(spec, x)
    return optimize.brentq(lambda t: cdf(spec, x, t) - p, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


def noncentral_chi2_density(k: int, lam: float, z):
    """Density of the noncentral chi-squared law with k degrees of freedom.

    ``0.5 * (z/lam)**((k-2)/4) * exp(-(z+lam)/2) * I_{(k-2)/2}(sqrt(lam z))``;
    for ``lam = 0`` the central chi-squared density.
    """
    if int(k) != k or k < 2 or k % 2:
        raise DomainError("k must be a positive even integer (k = 2n)")
    if lam < 0:
        raise DomainError("noncentrality must be non-negative")
    za = np.asarray(z, dtype=float)
    if np.any(~(za > 0)):
        raise DomainError("noncentral_chi2_density requires z > 0")
    nu = k // 2 - 1
    if lam == 0:
        logp = (k / 2 - 1) * np.log(za) - za / 2 - (k / 2) * math.log(2.0) - special.gammaln(k / 2)
    else:
        arg = np.sqrt(lam * za)
        logp = (
            -math.log(2.0)
            + 0.25 * (k - 2) * (np.log(za) - math.log(lam))
            - 0.5 * (np.sqrt(za) - math.sqrt(lam)) ** 2
            + log_bessel_i(nu, arg, scaled=True)
        )
    out = np.exp(logp)
    return float(out) if np.ndim(out) == 0 else out
