"""Physical units for the soliton link.

The fibre is described in engineering units and mapped once onto the
dimensionless propagation model ``i q_z + q_tt/2 + |q|^2 q = n``:

* power unit ``P0`` (1 mW), distance unit ``l0 = 1/(gamma P0)``, time unit
  ``tau0 = sqrt(l0 |beta2|)``;
* normalised noise intensity ``D = sigma0^2 l0 / (P0 tau0)`` where the ideal
  distributed-Raman spectral density is ``sigma0^2 = alpha K_T h nu0``;
* accumulated amplitude-noise variance ``sigma_n_sq = D Z / 2``.

Unit conventions inside this module: km, ps, W, Hz, J. Everything that
leaves the module is dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError

PLANCK_J_S = 6.62607015e-34   # J s (exact SI)
PS_TO_S = 1e-12
THZ_TO_HZ = 1e12
MW_TO_W = 1e-3
DB_TO_NEPER_POWER = math.log(10.0) / 10.0   # dB/km -> 1/km (power attenuation)


@dataclass(frozen=True)
class FiberSystem:
    beta2_ps2_per_km: float = -21.67
    gamma_per_w_km: float = 2.0
    alpha_db_per_km: float = 0.20
    k_t: float = 1.13
    nu0_thz: float = 193.41
    p0_mw: float = 1.0
    distance_km: float = 500.0
    dual_pol: bool = False

    def __post_init__(self):
        if not self.beta2_ps2_per_km < 0:
            raise DomainError("beta2 must be negative (anomalous dispersion) for bright solitons")
        for name in ("gamma_per_w_km", "alpha_db_per_km", "k_t", "nu0_thz", "p0_mw", "distance_km"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def gamma_eff(self) -> float:
        """Effective nonlinear coefficient, 1/(W km); 8/9 of gamma for two polarisations."""
        return self.gamma_per_w_km * (8.0 / 9.0 if self.dual_pol else 1.0)


@dataclass(frozen=True)
class Scales:
    l0_km: float
    tau0_ps: float
    d_noise: float
    z_norm: float
    sigma_n_sq: float


def derive_scales(sys: FiberSystem) -> Scales:
    p0_w = sys.p0_mw * MW_TO_W
    l0_km = 1.0 / (sys.gamma_eff * p0_w)
    tau0_ps = math.sqrt(l0_km * abs(sys.beta2_ps2_per_km))
    alpha_per_km = sys.alpha_db_per_km * DB_TO_NEPER_POWER
    sigma0_sq = alpha_per_km * sys.k_t * PLANCK_J_S * sys.nu0_thz * THZ_TO_HZ  # W/(km Hz)
    d_noise = sigma0_sq * l0_km / (p0_w * tau0_ps * PS_TO_S)
    z_norm = sys.distance_km / l0_km
    return Scales(l0_km, tau0_ps, d_noise, z_norm, 0.5 * d_noise * z_norm)


def normalize_time(sys: FiberSystem, t_ps: float) -> float:
    return t_ps / derive_scales(sys).tau0_ps


def denormalize_time(sys: FiberSystem, t: float) -> float:
    return t * derive_scales(sys).tau0_ps


def normalize_distance(sys: FiberSystem, l_km: float) -> float:
    return l_km / derive_scales(sys).l0_km


def denormalize_distance(sys: FiberSystem, z: float) -> float:
    return z * derive_scales(sys).l0_km


def normalize_power(sys: FiberSystem, p_mw: float) -> float:
    return p_mw / sys.p0_mw


def denormalize_power(sys: FiberSystem, p: float) -> float:
    return p * sys.p0_mw


def symbol_period_norm(sys: FiberSystem, symbol_rate_gbd: float) -> float:
    """Slot duration ``1/R`` in normalised time."""
    if not symbol_rate_gbd > 0:
        raise DomainError("symbol rate must be positive")
    return normalize_time(sys, 1e3 / symbol_rate_gbd)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


def power_to_sigma_s_sq(sys: FiberSystem, launch_power_dbm: float, symbol_period: float) -> float:
    """Input second moment ``E[A]`` that yields the requested average launch power.

    A sech soliton of amplitude A carries normalised energy 2A, so a train of
    i.i.d. slots of length ``symbol_period`` has mean power ``2 E[A] / T_s``
    in units of ``P0``.
    """
    if not (symbol_period > 0 and math.isfinite(launch_power_dbm)):
        raise DomainError("symbol period must be positive and the power finite")
    p = normalize_power(sys, dbm_to_mw(launch_power_dbm))
    return 0.5 * p * symbol_period


def sigma_s_sq_to_power_dbm(sys: FiberSystem, sigma_s_sq: float, symbol_period: float) -> float:
    """Inverse of :func:`power_to_sigma_s_sq`."""
    if not (sigma_s_sq > 0 and symbol_period > 0):
        raise DomainError("sigma_s_sq and symbol period must be positive")
    return mw_to_dbm(denormalize_power(sys, 2.0 * sigma_s_sq / symbol_period))
