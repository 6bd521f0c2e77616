"""Split-step Fourier propagation of the normalised scalar NSE with ASE noise.

The model is ``i q_z + q_tt / 2 + |q|^2 q = n(z, t)`` with white circular
Gaussian noise of intensity ``D``. Each step of length ``dz`` applies a
half linear step in the Fourier domain, the exact nonlinear phase rotation
``q exp(i |q|^2 dz)``, adds the noise increment, and applies the second half
linear step. Consecutive half steps are merged into one full step. The noise
increment per sample is complex Gaussian with variance ``D dz / dt``.

Noise for run ``r`` comes from ``rng.stream(seed, r)`` and is consumed in
step order. A run therefore produces the same result whether it is
propagated alone or as part of a batch.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy.fft as sfft

from .errors import DomainError, InteractionBudgetError, StabilityWarning
from .rng import stream

MAGIC = b"CHIWAVE1"
_HEADER = struct.Struct("<8sQdd")
NONLINEAR_PHASE_LIMIT = 0.05


@dataclass
class WaveformFrame:
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise DomainError("a frame holds at least two samples in a 1-D array")
        if not self.dt > 0:
            raise DomainError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def window(self, lo: float, hi: float) -> "WaveformFrame":
        """Samples with ``lo <= t < hi``."""
        t = self.times
        sel = np.flatnonzero((t >= lo - 1e-9 * self.dt) & (t < hi - 1e-9 * self.dt))
        return WaveformFrame(self.dt, self.samples[sel], float(t[sel[0]]))

    def to_bytes(self) -> bytes:
        body = np.empty(2 * self.samples.size, dtype="<f8")
        body[0::2] = self.samples.real
        body[1::2] = self.samples.imag
        return _HEADER.pack(MAGIC, self.samples.size, self.dt, self.t0) + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "WaveformFrame":
        if len(data) < _HEADER.size:
            raise ValueError("truncated waveform header")
        magic, count, dt, t0 = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"not a waveform file (magic {magic!r})")
        body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
        if body.size != 2 * count:
            raise ValueError(f"expected {count} samples, found {body.size / 2}")
        return cls(dt, body[0::2] + 1j * body[1::2], t0)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "WaveformFrame":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class PulseTrainConfig:
    amplitudes: tuple = field(default_factory=tuple)
    ts: float = 1.0
    beta0: float = 0.0
    guard: float = 2.0
    interaction_budget: float | None = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        if not self.ts > 0:
            raise DomainError("symbol period must be positive")
        if not 0 <= self.beta0 < math.pi / 2:
            raise DomainError("beta0 must lie in [0, pi/2)")
        if self.guard < 0:
            raise DomainError("guard must be non-negative")
        if any(not a > 0 for a in self.amplitudes):
            raise DomainError("soliton amplitudes must be positive")

    def check_budget(self) -> None:
        if self.interaction_budget is None or not self.amplitudes:
            return
        worst = math.exp(-min(self.amplitudes) * self.ts)
        if worst > self.interaction_budget:
            raise InteractionBudgetError(
                f"exp(-A_min T_s) = {worst:.3g} exceeds the interaction budget "
                f"{self.interaction_budget:g}; increase T_s or the smallest amplitude"
            )


def slot_grid(n_slots: int, ts: float, guard: float, dt: float) -> tuple[float, int]:
    """First sample time and sample count; slot k is centred on ``k * ts``."""
    count = max(2, int(round((n_slots + 2 * guard) * ts / dt)))
    return -(guard + 0.5) * ts, count


def synthesize(config: PulseTrainConfig, dt: float) -> WaveformFrame:
    """Sample ``sum_k A_k sech(A_k (t - k T_s))`` on a uniform grid."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    config.check_budget()
    n = len(config.amplitudes)
    t0, count = slot_grid(n, config.ts, config.guard, dt)
    t = t0 + dt * np.arange(count)
    q = np.zeros(count)
    for k, a in enumerate(config.amplitudes):
        arg = np.minimum(a * np.abs(t - k * config.ts), 700.0)
        q += a / np.cosh(arg)
    return WaveformFrame(dt, q.astype(complex), t0)


@numba.njit(cache=True, nogil=True)
def _nonlinear_noise(q, dz, noise, scale):
    rows, cols = q.shape
    for i in range(rows):
        for j in range(cols):
            v = q[i, j]
            phi = (v.real * v.real + v.imag * v.imag) * dz
            q[i, j] = v * complex(math.cos(phi), math.sin(phi)) + scale * complex(
                noise[i, 2 * j], noise[i, 2 * j + 1]
            )


@numba.njit(cache=True, nogil=True)
def _nonlinear(q, dz):
    rows, cols = q.shape
    for i in range(rows):
        for j in range(cols):
            v = q[i, j]
            phi = (v.real * v.real + v.imag * v.imag) * dz
            q[i, j] = v * complex(math.cos(phi), math.sin(phi))


def _step_count(z_total: float, dz: float) -> int:
    if not (dz > 0 and z_total >= 0):
        raise DomainError("dz must be positive and z_total non-negative")
    steps = int(round(z_total / dz))
    if abs(steps * dz - z_total) > 1e-9 * max(z_total, dz):
        raise DomainError(f"dz = {dz} does not divide z_total = {z_total}")
    return steps


def propagate_batch(
    samples: np.ndarray,
    dt: float,
    z_total: float,
    dz: float,
    d_noise: float,
    seed: int = 0,
    run_ids=None,
    nonlinear: bool = True,
) -> np.ndarray:
    """Propagate a stack of waveforms, one row per run (returns a new array)."""
    q = np.array(samples, dtype=complex, ndmin=2, copy=True)
    rows, nt = q.shape
    steps = _step_count(z_total, dz)
    if d_noise < 0:
        raise DomainError("noise intensity must be non-negative")
    if steps == 0:
        return q
    peak = float(np.max(np.abs(q) ** 2)) * dz
    if nonlinear and peak > NONLINEAR_PHASE_LIMIT:
        warnings.warn(
            f"nonlinear phase per step {peak:.3g} rad exceeds {NONLINEAR_PHASE_LIMIT}",
            StabilityWarning,
            stacklevel=2,
        )
    w = 2.0 * math.pi * sfft.fftfreq(nt, dt)
    half = np.exp(-0.25j * w * w * dz)
    full = half * half
    scale = math.sqrt(d_noise * dz / (2.0 * dt))
    if run_ids is None:
        run_ids = range(rows)
    gens = [stream(seed, int(r)) for r in run_ids]
    if len(gens) != rows:
        raise DomainError("run_ids must match the number of rows")
    noise = np.empty((rows, 2 * nt))
    spectrum = sfft.fft(q, axis=-1) * half
    for s in range(steps):
        q = sfft.ifft(spectrum, axis=-1)
        if d_noise > 0:
            for i, g in enumerate(gens):
                g.standard_normal(out=noise[i])
            if nonlinear:
                _nonlinear_noise(q, dz, noise, scale)
            else:
                q += scale * (noise[:, 0::2] + 1j * noise[:, 1::2])
        elif nonlinear:
            _nonlinear(q, dz)
        spectrum = sfft.fft(q, axis=-1)
        spectrum *= full if s < steps - 1 else half
    return sfft.ifft(spectrum, axis=-1)


def propagate(
    frame: WaveformFrame,
    z_total: float,
    dz: float,
    d_noise: float,
    seed: int = 0,
    run_id: int = 0,
    nonlinear: bool = True,
) -> WaveformFrame:
    """Propagate one frame; the noise stream is ``(seed, run_id)``."""
    out = propagate_batch(frame.samples[None, :], frame.dt, z_total, dz, d_noise, seed,
                          [run_id], nonlinear)
    return WaveformFrame(frame.dt, out[0], frame.t0)
