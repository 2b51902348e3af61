"""
Seeded random streams.

All randomness goes through ``Rng``, a thin wrapper around numpy's PCG64 bit
generator. PCG64 output for a given seed is fixed by numpy across platforms,
so the same seed yields the same sample stream everywhere.
"""

import numpy as np


class Rng:
    """Deterministic PCG64 stream identified by a seed and an optional key."""

    def __init__(self, seed, key=()):
        if seed < 0:
            raise ValueError(f"Seed must be a non-negative integer, got {seed}")
        self.seed = int(seed)
        self.key = tuple(key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, index):
        """Independent child stream; the same (seed, key, index) always matches."""
        return Rng(self.seed, self.key + (int(index),))

    def normal(self, shape, scale=1.0):
        return self._generator.normal(0.0, scale, size=shape)

    def uniform(self, low, high, shape):
        return self._generator.uniform(low, high, size=shape)

    def bernoulli(self, keep_prob, shape):
        """Array of {0.0, 1.0}; each entry is 1 with probability keep_prob."""
        return (self._generator.random(size=shape) < keep_prob).astype(np.float64)

    def permutation(self, n):
        return self._generator.permutation(n)

    def __repr__(self):
        return f"Rng(seed={self.seed}, key={self.key})"
