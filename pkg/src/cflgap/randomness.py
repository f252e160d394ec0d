"""Seeded exact-rational randomness.

Every random decision in this package reduces to uniform integer draws from
a 64-bit-seeded PCG64 stream: probability branches compare an integer draw
against the numerator of an exact rational, never a float.  A seed therefore
fully determines every sample, and parallel workers use independently derived
streams.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

__all__ = ["ExactRng", "derive_worker_seed"]

_MIX = 0x9E3779B97F4A7C15  # 64-bit odd constant for worker-stream derivation


def derive_worker_seed(seed: int, worker: int) -> int:
    """Deterministic per-worker seed, independent of scheduling order."""
    x = (seed ^ ((worker + 1) * _MIX)) & 0xFFFFFFFFFFFFFFFF
    # splitmix64 finalizer
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & 0xFFFFFFFFFFFFFFFF
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


class ExactRng:
    """Uniform integer draws plus exact-rational branching on one stream."""

    def __init__(self, seed: int):
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def integer_below(self, n: int) -> int:
        """Uniform integer in [0, n). Exact for arbitrarily large n."""
        if n <= 0:
            raise ValueError(f"integer_below needs n >= 1, got {n}")
        if n == 1:
            return 0
        if n <= 2**63:
            return int(self._gen.integers(n))
        bits = n.bit_length()
        words = (bits + 31) // 32
        while True:
            r = 0
            for w in self._gen.integers(0, 1 << 32, size=words, dtype=np.uint64):
                r = (r << 32) | int(w)
            r >>= words * 32 - bits
            if r < n:
                return r

    def bernoulli(self, p: Fraction) -> bool:
        """True with probability exactly p (0 <= p <= 1)."""
        if p < 0 or p > 1:
            raise ValueError(f"probability out of range: {p}")
        if p.denominator == 1:
            return p.numerator == 1
        return self.integer_below(p.denominator) < p.numerator

    def weighted_index(self, probs: Sequence[Fraction]) -> int:
        """Index drawn with the given exact probabilities (must sum to 1)."""
        total = sum(probs, Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        denom = lcm(*(p.denominator for p in probs))
        u = self.integer_below(denom)
        acc = 0
        for idx, p in enumerate(probs):
            acc += p.numerator * (denom // p.denominator)
            if u < acc:
                return idx
        raise AssertionError("unreachable: weights sum to the denominator")

    def permuted(self, items: np.ndarray) -> np.ndarray:
        """Uniformly random permutation of a 1-d integer array."""
        return self._gen.permutation(items)

    def chosen_positions(self, n: int, r: int) -> np.ndarray:
        """r distinct positions chosen uniformly from range(n)."""
        if not 0 <= r <= n:
            raise ValueError(f"cannot choose {r} of {n}")
        return self._gen.permutation(n)[:r]
