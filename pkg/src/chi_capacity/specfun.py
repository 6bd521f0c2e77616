"""Overflow-safe special functions.

Every channel-law formula in the package goes through these helpers so that
Bessel arguments of order 1e6 and beyond (high SNR) stay representable. The
value ``-inf`` is used as an explicit sentinel for ``ln 0``; callers that can
see it (densities on the boundary ``y = 0``, ``I_nu(0)`` with ``nu >= 1``)
treat it as a zero density.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

# Below SERIES_CROSSOVER_C * 2 * (nu + 1) the power series is summed directly in
# log form; above it the exponentially scaled Amos routine is used.
SERIES_CROSSOVER_C = 0.5
_SERIES_MAX_TERMS = 400

EULER_GAMMA = 0.5772156649015329

# scipy's scaled Bessel routines return NaN beyond about 1e9; the Hankel
# expansion takes over from here (it needs x >> nu**2 as well).
HANKEL_MIN_X = 1e8


def _check_order(nu) -> int:
    if int(nu) != nu or nu < 0:
        raise DomainError(f"Bessel order must be a non-negative integer, got {nu!r}")
    return int(nu)


def _log_series_i(nu: int, x: np.ndarray) -> np.ndarray:
    """ln I_nu(x) from the ascending series, for moderate x > 0."""
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * q / (k * (k + nu))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return nu * np.log(0.5 * x) - special.gammaln(nu + 1) + np.log(total)


def _hankel_sum(nu: int, x: np.ndarray, sign: float) -> np.ndarray:
    """``sum_k sign**k a_k(nu) / x**k`` of the large-argument Bessel expansions."""
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 30):
        term = term * sign * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _hankel_region(nu: int, x: np.ndarray) -> np.ndarray:
    return x >= max(HANKEL_MIN_X, 100.0 * nu * nu)


def log_bessel_i(nu, x, scaled: bool = False):
    """Natural log of the modified Bessel function of the first kind.

    Parameters
    ----------
    nu : int
        Non-negative integer order.
    x : array_like
        Non-negative argument.
    scaled : bool
        If true return ``ln(exp(-x) I_nu(x))`` instead, which avoids the
        large cancellation ``ln I_nu(x) - x`` in channel densities.

    Returns
    -------
    ndarray or float
        ``-inf`` where ``I_nu(x) = 0`` (``x = 0`` and ``nu >= 1``).
    """
    nu = _check_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("log_bessel_i requires x >= 0")
    out = np.empty_like(xa)
    zero = xa == 0
    small = (~zero) & (xa < SERIES_CROSSOVER_C * 2.0 * (nu + 1))
    large = ~(zero | small)
    out[zero] = 0.0 if nu == 0 else -np.inf
    if np.any(small):
        xs = xa[small]
        out[small] = _log_series_i(nu, xs) - (xs if scaled else 0.0)
    hankel = large & _hankel_region(nu, xa)
    amos = large & ~hankel
    if np.any(amos):
        xl = xa[amos]
        out[amos] = np.log(special.ive(nu, xl)) + (0.0 if scaled else xl)
    if np.any(hankel):
        xh = xa[hankel]
        out[hankel] = -0.5 * np.log(2.0 * np.pi * xh) + np.log(_hankel_sum(nu, xh, -1.0)) + (0.0 if scaled else xh)
    if out.ndim == 0:
        return float(out)
    return out


def bessel_k_scaled(nu, x):
    """``exp(x) K_nu(x)`` for x > 0, finite up to very large arguments."""
    nu = _check_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("bessel_k_scaled requires x > 0")
    out = np.asarray(special.kve(nu, xa), dtype=float)
    hankel = _hankel_region(nu, xa)
    if np.any(hankel):
        xh = xa[hankel]
        out[hankel] = np.sqrt(np.pi / (2.0 * xh)) * _hankel_sum(nu, xh, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def digamma(x):
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("digamma is only provided for x > 0")
    out = special.digamma(xa)
    return float(out) if np.ndim(out) == 0 else out


def lerch_phi_1n(alpha: float, n: int) -> float:
    """Lerch transcendent Phi(alpha, 1, n) for 0 < alpha < 1 and integer n >= 1.

    The closed form ``-ln(1-alpha)/alpha**n - sum_{k=0}^{n-2} alpha**(k+1-n)/(k+1)``
    is used whenever it is numerically benign. For small alpha and large n its
    two parts cancel to many digits, so the convergent tail series
    ``sum_k alpha**k / (k + n)`` is summed instead.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"lerch_phi_1n requires 0 < alpha < 1, got {alpha!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"lerch_phi_1n requires integer n >= 1, got {n!r}")
    n = int(n)
    if n == 1:
        return -math.log1p(-alpha) / alpha
    if n * alpha ** (1 - n) < 1e3:
        head = -math.log1p(-alpha) / alpha**n
        tail = math.fsum(alpha ** (k + 1 - n) / (k + 1) for k in range(n - 1))
        return head - tail
    total, term, k = 0.0, 1.0, 0
    while True:
        contrib = term / (k + n)
        total += contrib
        if contrib < 1e-18 * total:
            return total
        k += 1
        term *= alpha
