"""Quadrature helpers.

Two engines are used throughout:

* :func:`integrate` wraps adaptive Gauss-Kronrod (QUADPACK) and turns a
  missed tolerance into :class:`ConvergenceError` instead of a warning.
* :func:`gl_panels` builds composite Gauss-Legendre rules; these are used
  for vectorised tensor-product integrals (output marginals, ASK sums) and
  refined by panel halving until the integral stabilises.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate

from .errors import ConvergenceError

LOG2E = 1.0 / math.log(2.0)


@lru_cache(maxsize=16)
def _leggauss(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    return t, w


def gl_panels(breaks: Sequence[float], max_width: float, order: int = 16):
    """Composite Gauss-Legendre nodes and weights.

    Each interval between consecutive ``breaks`` is cut into equal panels no
    wider than ``max_width``. Discontinuities of the integrand should be
    listed in ``breaks``.
    """
    t, w = _leggauss(order)
    b = np.unique(np.asarray(breaks, dtype=float))
    edges = [b[:1]]
    for lo, hi in zip(b[:-1], b[1:]):
        m = max(1, int(math.ceil((hi - lo) / max_width)))
        edges.append(np.linspace(lo, hi, m + 1)[1:])
    e = np.concatenate(edges)
    h = np.diff(e)
    nodes = (e[:-1, None] + 0.5 * h[:, None] * (t + 1.0)).ravel()
    weights = (0.5 * h[:, None] * w).ravel()
    return nodes, weights


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    rel_tol: float = 1e-10,
    abs_tol: float = 0.0,
    points: Sequence[float] | None = None,
    limit: int = 400,
) -> float:
    """Adaptive integral of ``f`` over ``[a, b]`` (``b`` may be ``inf``)."""
    kwargs = {"epsabs": abs_tol, "epsrel": rel_tol, "limit": limit}
    if points is not None and math.isfinite(b):
        inner = sorted(p for p in points if a < p < b)
        if inner:
            kwargs["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        try:
            value, err = _integrate.quad(f, a, b, **kwargs)
        except _integrate.IntegrationWarning as exc:
            value, err = _integrate.quad(f, a, b, full_output=1, **kwargs)[:2]
            if err > 10 * max(abs_tol, rel_tol * abs(value)):
                raise ConvergenceError(f"quadrature on [{a}, {b}] failed: {exc}") from exc
    return value


def integrate_pieces(
    f: Callable[[float], float],
    breaks: Sequence[float],
    *,
    rel_tol: float = 1e-10,
    abs_tol: float = 0.0,
) -> float:
    """Sum of adaptive integrals over consecutive ``breaks``.

    Splitting a long range with very different scales into pieces keeps
    QUADPACK's bisection from missing narrow features.
    """
    parts = [
        integrate(f, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol)
        for lo, hi in zip(breaks[:-1], breaks[1:])
        if hi > lo
    ]
    return math.fsum(parts)
