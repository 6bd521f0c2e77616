"""Semi-analytic entropies for the Rayleigh-input chi channel.

With a Rayleigh input of second moment ``rho`` on the unit-noise channel
(``sigma_n_sq = 1``; mutual information is invariant under a joint rescaling)
both differential entropies reduce to one-dimensional integrals:

* the conditional entropy is a combination of digamma values, the Lerch
  transcendent ``Phi(alpha, 1, n)`` and the Bessel integral
  ``F_n(rho) = int_0^inf xi K_{n-1}(c xi) I_{n-1}(xi) ln I_{n-1}(xi) dxi``
  with ``c = sqrt(1 + 1/rho)``;
* the output entropy splits into elementary terms plus the correction
  ``h4 = -E[ln f(alpha Y^2)]``, where ``f(z) = P(n-1, z)`` is the regularised
  lower incomplete gamma function.

Here ``alpha = rho / (rho + 1)``. Everything is computed in nats and converted
to bits on return.

At high SNR the conditional entropy is a small difference of terms of order
``2 rho``, so ``F_n`` has to be integrated to roughly twelve digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .quadrature import LOG2E, integrate, integrate_pieces
from .specfun import EULER_GAMMA, digamma, lerch_phi_1n, log_bessel_i


def _check_n_rho(n, rho):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError(f"rho must be positive, got {rho!r}")
    return int(n), float(rho)


def alpha_of(rho: float) -> float:
    """``rho / (rho + 1)``."""
    return rho / (rho + 1.0)


@dataclass(frozen=True)
class EntropyReport:
    rho: float
    n: int
    h_y_given_x_bits: float
    h_y_bits: float
    mi_bits: float
    method: str


def f_n_integral(n: int, rho: float, tol: float = 1e-13) -> float:
    """The Bessel product integral ``F_n(rho)``.

    The integrand is evaluated in scaled form,
    ``xi exp(-(c-1) xi) [e^{c xi} K(c xi)] [e^{-xi} I(xi)] ln I(xi)``, so that
    only the slow envelope ``exp(-(c-1) xi)`` with ``c - 1 ~ 1/(2 rho)``
    remains. The range is truncated where that envelope has decayed below
    ``tol``, and split geometrically so that QUADPACK resolves both the
    ``xi ~ 1`` region and the long tail.
    """
    n, rho = _check_n_rho(n, rho)
    if not (0 < tol <= 1e-4):
        raise DomainError("tol must lie in (0, 1e-4]")
    nu = n - 1
    inv = 1.0 / rho
    c = math.sqrt(1.0 + inv)
    cm1 = inv / (c + 1.0)  # c - 1 without cancellation
    crossover = nu + 1.0    # series / Amos switch inside log_bessel_i

    def integrand(xi):
        if xi <= 0.0:
            return 0.0
        if xi < crossover:
            log_i = float(log_bessel_i(nu, xi))
        else:
            log_i = math.log(special.ive(nu, xi)) + xi
        return xi * math.exp(-cm1 * xi) * special.kve(nu, c * xi) * special.ive(nu, xi) * log_i

    # integrand ~ xi^2 exp(-(c-1) xi) in the tail; the mass beyond u/(c-1) is ~ u^2 e^{-u}
    u = 10.0
    while u * u * math.exp(-u) > 1e-2 * tol:
        u += 1.0
    top = u / cm1
    breaks = [0.0]
    b = 1.0
    while b < top:
        breaks.append(b)
        b *= 2.0
    breaks.append(top)
    return integrate_pieces(integrand, breaks, rel_tol=tol, abs_tol=0.0)


def cond_entropy_closed_form(n: int, rho: float, sigma_n_sq: float = 1.0, tol: float = 1e-13) -> float:
    """Conditional differential entropy h(Y|X) in bits for a Rayleigh input.

    ``rho`` is the effective SNR. For a channel with noise variance
    ``sigma_n_sq`` the entropy shifts by ``log2(sigma_n)``.
    """
    n, rho = _check_n_rho(n, rho)
    if not sigma_n_sq > 0:
        raise DomainError("sigma_n_sq must be positive")
    a = alpha_of(rho)
    fn = f_n_integral(n, rho, tol)
    terms = [
        (2.0 * rho + n - 0.5 * n * digamma(n)) * LOG2E,
        -1.0,
        -0.5 * n * LOG2E * a * lerch_phi_1n(a, n),
        -((1.0 + 1.0 / rho) ** (0.5 * (n - 1))) * (fn / rho) * LOG2E,
        0.5 * math.log2(sigma_n_sq),
    ]
    if n > 1:
        terms.append(0.5 * (n - 1) * (math.log2(rho) - EULER_GAMMA * LOG2E))
    return math.fsum(terms)


def log_ratio_f(n: int, z):
    """``ln P(n-1, z)`` for z >= 0, accurate in both tails (``n >= 2``)."""
    z = np.asarray(z, dtype=float)
    nu = n - 1
    p = special.gammainc(nu, z)
    q = special.gammaincc(nu, z)
    with np.errstate(divide="ignore"):
        out = np.where(p < 0.5, np.log(p), np.log1p(-q))
        # leading term of the series when P underflows
        tiny = p < 1e-300
        if np.any(tiny):
            zt = np.where(tiny & (z > 0), z, 1.0)
            lead = nu * np.log(zt) - zt - special.gammaln(n)
            out = np.where(tiny, np.where(z > 0, lead, -np.inf), out)
    return out


def log_output_density_rayleigh(n: int, rho: float, y):
    """ln p_Y(y) for the Rayleigh input on the unit-noise channel."""
    n, rho = _check_n_rho(n, rho)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be non-negative")
    a = alpha_of(rho)
    with np.errstate(divide="ignore"):
        out = math.log(2.0) + np.log(y) - math.log(rho) - (n - 2) * math.log(a) - y * y / (rho + 1.0)
    if n > 1:
        out = out + log_ratio_f(n, a * y * y)
    return float(out) if np.ndim(out) == 0 else out


def output_density_rayleigh(n: int, rho: float, y):
    """Output density p_Y(y) for a Rayleigh input, unit noise variance."""
    return np.exp(log_output_density_rayleigh(n, rho, y))


def mean_log_output(n: int, rho: float) -> float:
    """E[ln Y] in nats: ``(alpha Phi(alpha, 1, n) + psi(n)) / 2``."""
    n, rho = _check_n_rho(n, rho)
    a = alpha_of(rho)
    return 0.5 * (a * lerch_phi_1n(a, n) + digamma(n))


def h4_correction(n: int, rho: float, tol: float = 1e-12) -> float:
    """``-E[ln f(alpha Y^2)]`` in nats; identically zero for n = 1."""
    n, rho = _check_n_rho(n, rho)
    if n == 1:
        return 0.0
    a = alpha_of(rho)

    def integrand(z):
        lf = float(log_ratio_f(n, z))
        return math.exp(-z / rho + lf) * lf if math.isfinite(lf) else 0.0

    # f ln f vanishes once 1 - f ~ z^{n-2} e^{-z} underflows
    top = n + 760.0
    breaks = sorted({0.0, *[m * rho for m in (1.0, 5.0, 20.0, 80.0) if m * rho < top],
                     float(n - 1), 2.0 * n + 20.0, 4.0 * n + 100.0, top})
    value = integrate_pieces(integrand, breaks, rel_tol=tol, abs_tol=1e-300)
    return -value / (rho * a ** (n - 1))


def output_entropy_exact(n: int, rho: float, tol: float = 1e-12) -> float:
    """Output differential entropy h(Y) in bits for a Rayleigh input (unit noise)."""
    n, rho = _check_n_rho(n, rho)
    a = alpha_of(rho)
    nats = math.fsum([
        math.log(rho / 2.0) + (n - 2) * math.log(a),
        -mean_log_output(n, rho),
        (rho + n) / (rho + 1.0),
        h4_correction(n, rho, tol),
    ])
    return nats * LOG2E


def h4_bound_bits(n: int, rho: float) -> float:
    """Upper bound ``(n-1) / (rho alpha^{n-1}) log2 e`` on the h4 correction."""
    n, rho = _check_n_rho(n, rho)
    return (n - 1) / (rho * alpha_of(rho) ** (n - 1)) * LOG2E


def output_entropy_asymptotic(rho: float) -> float:
    """Leading high-SNR output entropy in bits (independent of n)."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    return 0.5 * math.log2(rho) + (1.0 + 0.5 * EULER_GAMMA) * LOG2E - 1.0


def cond_entropy_limit() -> float:
    """High-SNR limit of h(Y|X), ``log2(pi e) / 2`` bits."""
    return 0.5 * math.log2(math.pi * math.e)


def mi_asymptote(rho: float) -> float:
    """High-SNR Rayleigh-input mutual information in bits."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    return 0.5 * math.log2(rho) + 0.5 * math.log2(math.exp(1.0 + EULER_GAMMA) / (4.0 * math.pi))


def rayleigh_mi(n: int, rho: float, tol: float = 1e-13) -> EntropyReport:
    """Exact Rayleigh-input mutual information from the semi-analytic entropies."""
    hyx = cond_entropy_closed_form(n, rho, tol=tol)
    hy = output_entropy_exact(n, rho, tol=max(tol, 1e-12))
    return EntropyReport(rho=float(rho), n=int(n), h_y_given_x_bits=hyx, h_y_bits=hy,
                         mi_bits=hy - hyx, method="closed_form")


def asymptotic_report(n: int, rho: float) -> EntropyReport:
    hy = output_entropy_asymptotic(rho)
    hyx = cond_entropy_limit()
    return EntropyReport(rho=float(rho), n=int(n), h_y_given_x_bits=hyx, h_y_bits=hy,
                         mi_bits=mi_asymptote(rho), method="asymptotic")
