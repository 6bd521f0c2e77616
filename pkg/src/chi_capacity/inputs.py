"""Input amplitude distributions.

Every continuous kind is parametrised by its second moment ``sigma_s_sq`` so
that ``E[X**2] = sigma_s_sq`` holds exactly. The one exception is the
truncated Rayleigh law, for which ``sigma_s_sq`` is the parameter of the parent
Rayleigh density (the truncated law carries a little more power).

Densities, in terms of ``s2 = sigma_s_sq`` and ``s = sqrt(s2)``:

================  ==========================================================
rayleigh          ``2x/s2 exp(-x**2/s2)``
geometric         ``sqrt(2)/s exp(-sqrt(2) x/s)`` (continuous exponential)
half-gaussian     ``sqrt(2/pi)/s exp(-x**2/(2 s2))``
maxwell-boltzmann ``3 sqrt(6) x**2/(sqrt(pi) s**3) exp(-3x**2/(2 s2))``
truncated-rayleigh  Rayleigh restricted to ``x >= x_hat``, renormalised by ``1-eta``
ask               ``M`` equiprobable points ``k * delta``, ``k = 0..M-1``
================  ==========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

KINDS = (
    "rayleigh",
    "geometric",
    "half-gaussian",
    "maxwell-boltzmann",
    "truncated-rayleigh",
    "ask",
)
CONTINUOUS_KINDS = KINDS[:-1]


@dataclass(frozen=True)
class InputSpec:
    kind: str
    sigma_s_sq: float
    x_hat: float = 0.0
    m: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown input kind {self.kind!r}; expected one of {KINDS}")
        if not (self.sigma_s_sq > 0 and math.isfinite(self.sigma_s_sq)):
            raise DomainError(f"sigma_s_sq must be positive, got {self.sigma_s_sq!r}")
        if self.x_hat < 0:
            raise DomainError("x_hat must be non-negative")
        if self.kind == "ask":
            if self.m is None or int(self.m) != self.m or self.m < 1:
                raise DomainError("ask input needs a positive point count m")
        if self.x_hat and self.kind != "truncated-rayleigh":
            raise DomainError("x_hat only applies to the truncated-rayleigh kind")

    @property
    def is_discrete(self) -> bool:
        return self.kind == "ask"

    def with_power(self, sigma_s_sq: float) -> "InputSpec":
        return InputSpec(self.kind, sigma_s_sq, self.x_hat, self.m)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "sigma_s_sq": self.sigma_s_sq}
        if self.kind == "truncated-rayleigh":
            out["x_hat"] = self.x_hat
        if self.kind == "ask":
            out["m"] = self.m
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "InputSpec":
        m = d.get("m")
        return cls(str(d["kind"]), float(d["sigma_s_sq"]), float(d.get("x_hat", 0.0)),
                   None if m is None else int(m))


def outage_probability(sigma_s_sq: float, a_hat: float) -> float:
    """Rayleigh mass below the amplitude threshold, ``1 - exp(-a_hat/sigma_s_sq)``."""
    if a_hat < 0:
        raise DomainError("a_hat must be non-negative")
    if not sigma_s_sq > 0:
        raise DomainError("sigma_s_sq must be positive")
    return -math.expm1(-a_hat / sigma_s_sq)


def ask_points(m_points: int, sigma_s_sq: float) -> np.ndarray:
    """Equally spaced constellation ``{0, d, ..., (M-1) d}`` with second moment ``sigma_s_sq``."""
    if int(m_points) != m_points or m_points < 1:
        raise DomainError("m_points must be a positive integer")
    m = int(m_points)
    if m == 1:
        return np.zeros(1)
    delta = math.sqrt(sigma_s_sq * 6.0 / ((m - 1) * (2 * m - 1)))
    return delta * np.arange(m, dtype=float)


def log_density(spec: InputSpec, x) -> np.ndarray:
    """ln p_X(x); ``-inf`` outside the support."""
    if spec.is_discrete:
        raise DomainError("ask inputs are discrete; use ask_points")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("amplitudes must be non-negative")
    s2 = spec.sigma_s_sq
    s = math.sqrt(s2)
    with np.errstate(divide="ignore"):
        if spec.kind in ("rayleigh", "truncated-rayleigh"):
            out = math.log(2.0 / s2) + np.log(xa) - xa * xa / s2
            if spec.kind == "truncated-rayleigh":
                # 1 - eta = exp(-x_hat**2 / s2)
                out = np.where(xa >= spec.x_hat, out + spec.x_hat**2 / s2, -np.inf)
        elif spec.kind == "geometric":
            rate = math.sqrt(2.0) / s
            out = math.log(rate) - rate * xa
        elif spec.kind == "half-gaussian":
            out = 0.5 * math.log(2.0 / (math.pi * s2)) - xa * xa / (2.0 * s2)
        else:
            out = (
                math.log(3.0 * math.sqrt(6.0) / (math.sqrt(math.pi) * s**3))
                + 2.0 * np.log(xa)
                - 1.5 * xa * xa / s2
            )
    return float(out) if np.ndim(out) == 0 else out


def density(spec: InputSpec, x):
    return np.exp(log_density(spec, x))


def upper_support(spec: InputSpec, tail: float = 1e-17) -> float:
    """Amplitude beyond which the input mass is below ``tail``."""
    s = math.sqrt(spec.sigma_s_sq)
    L = -math.log(tail)
    if spec.kind == "ask":
        return float(ask_points(spec.m, spec.sigma_s_sq)[-1])
    if spec.kind == "rayleigh":
        return s * math.sqrt(L)
    if spec.kind == "truncated-rayleigh":
        return math.sqrt(spec.x_hat**2 + spec.sigma_s_sq * L)
    if spec.kind == "geometric":
        return s * L / math.sqrt(2.0)
    if spec.kind == "half-gaussian":
        return s * math.sqrt(2.0 * L)
    # Maxwell-Boltzmann tail ~ x exp(-3x^2/2s2); a few extra units cover the prefactor
    return s * math.sqrt(2.0 * (L + 5.0) / 3.0)


def breakpoints(spec: InputSpec) -> list[float]:
    """Points where the density or its derivative has a kink, plus the support ends."""
    pts = [0.0, upper_support(spec)]
    if spec.kind == "truncated-rayleigh" and spec.x_hat > 0:
        pts.insert(1, spec.x_hat)
    return pts


def sample(spec: InputSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    s2 = spec.sigma_s_sq
    s = math.sqrt(s2)
    if spec.kind == "rayleigh":
        return np.sqrt(s2 * rng.standard_exponential(size))
    if spec.kind == "truncated-rayleigh":
        # X^2 is exponential, so conditioning on X >= x_hat just shifts it
        return np.sqrt(spec.x_hat**2 + s2 * rng.standard_exponential(size))
    if spec.kind == "geometric":
        return (s / math.sqrt(2.0)) * rng.standard_exponential(size)
    if spec.kind == "half-gaussian":
        return s * np.abs(rng.standard_normal(size))
    if spec.kind == "maxwell-boltzmann":
        shape = () if size is None else tuple(np.atleast_1d(size))
        g = rng.standard_normal(shape + (3,))
        return (s / math.sqrt(3.0)) * np.sqrt(np.sum(g * g, axis=-1))
    pts = ask_points(spec.m, s2)
    return pts[rng.integers(0, spec.m, size=size)]


def second_moment(spec: InputSpec) -> float:
    """E[X^2] in closed form."""
    if spec.kind == "truncated-rayleigh":
        return spec.x_hat**2 + spec.sigma_s_sq
    if spec.is_discrete:
        return float(np.mean(ask_points(spec.m, spec.sigma_s_sq) ** 2))
    return spec.sigma_s_sq
