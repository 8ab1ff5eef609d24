"""Deterministic RNG stream derivation.

Every stochastic routine takes a ``seed`` and derives independent
substreams with :func:`substream`, so replica ``i`` always sees the same
stream regardless of scheduling or thread count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 63) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream addressed by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def mix64(seed: int, *key: int) -> int:
    """64-bit state for the in-kernel splitmix generator (same addressing idea)."""
    z = (int(seed) & 0xFFFFFFFFFFFFFFFF) ^ 0x9E3779B97F4A7C15
    for k in key:
        z ^= (int(k) & 0xFFFFFFFFFFFFFFFF) * 0xBF58476D1CE4E5B9 & 0xFFFFFFFFFFFFFFFF
        z = (z ^ (z >> 30)) * 0x94D049BB133111EB & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 31
    return z or 0x1234567887654321
