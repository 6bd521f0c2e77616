"""Deterministic, splittable random streams.

A stream is addressed by ``(master_seed, *key)``; the same address always
yields the same Philox counter-based generator, no matter which worker asks
for it or in which order. Monte-Carlo shards, simulation runs and symbol
slots each get their own address, which makes results independent of the
degree of parallelism.
"""

from __future__ import annotations

import os

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, *key: int) -> np.random.Generator:
    if master_seed < 0 or master_seed > _MASK64:
        raise ValueError("master seed must be a 64-bit unsigned integer")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def max_workers() -> int:
    """Worker cap, honouring ``CHI_CAPACITY_THREADS``."""
    env = os.environ.get("CHI_CAPACITY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
