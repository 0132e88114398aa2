"""Deterministic seed derivation shared by the estimator and sweep drivers."""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    """One SplitMix64 scrambling round (Steele et al. 2014)."""
    x = (x + _GOLDEN) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def hash64(*parts: int) -> int:
    """Combine integers into one 64-bit seed; order-sensitive and reproducible.

    Each part is folded in with a SplitMix64 round, so (seed, a, b) and
    (seed, b, a) give unrelated streams.
    """
    h = 0
    for p in parts:
        h = _splitmix64((h ^ (int(p) & _MASK)) & _MASK)
    return h


def rng_from(*parts: int) -> np.random.Generator:
    return np.random.default_rng(hash64(*parts))
