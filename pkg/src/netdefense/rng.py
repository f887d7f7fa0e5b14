"""Counter-based SplitMix64 stream.

Draw ``i`` (0-based) of a stream seeded with ``s`` is ``mix(s + (i + 1) * GOLDEN)``
where ``mix`` is the SplitMix64 finalizer, all arithmetic modulo 2**64. Uniform
reals take the top 53 bits. Any language with 64-bit unsigned integers reproduces
the same sequence.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= _MASK:
            raise ValueError("Seed must be a 64-bit unsigned integer.")
        self.seed = seed
        self.counter = 0

    def next_u64(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("Draw count must be nonnegative.")
        steps = np.arange(self.counter + 1, self.counter + 1 + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + steps * GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
        return z

    def uniform(self, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        unit = (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * unit

    def integers(self, count: int, low: int, high: int) -> np.ndarray:
        """Integers uniform on the closed range [low, high]."""
        if high < low:
            raise ValueError("Empty integer range.")
        span = high - low + 1
        values = low + np.floor(self.uniform(count) * span).astype(np.int64)
        return np.minimum(values, high)
