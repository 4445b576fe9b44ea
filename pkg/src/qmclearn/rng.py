"""Seedable, splittable random streams.

All randomness in this package flows through the Philox 4x64-10
counter-based generator, keyed by a SplitMix64 fold of a user seed and an
arbitrary tuple of stream indices.  Both algorithms are published and
carry no hidden global state, so any (seed, *stream) pair names one
reproducible stream, independent of every other stream and of the order
in which streams are consumed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    """One step of Vigna's SplitMix64 output function."""
    x = (x + _GAMMA) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def philox_key(seed: int, *stream: int) -> np.ndarray:
    """Fold (seed, *stream) into the 128-bit Philox key.

    The fold is a SplitMix64 chain over the integers in order, so
    distinct tuples give statistically independent keys.
    """
    h = _splitmix64(int(seed) & _MASK64)
    for part in stream:
        h = _splitmix64((h ^ (int(part) & _MASK64)) & _MASK64)
    lo = _splitmix64(h)
    hi = _splitmix64(lo)
    return np.array([lo, hi], dtype=np.uint64)


def generator(seed: int, *stream: int) -> np.random.Generator:
    """A fresh Philox generator for the stream named by (seed, *stream)."""
    return np.random.Generator(np.random.Philox(key=philox_key(seed, *stream)))
