"""Deterministic 64-bit hashing and random number generation.

Everything downstream that needs randomness (weight init, shuffling,
negative sampling, A/B position coins) draws from SplitMix64 streams seeded
through ``mix_seed`` so results are reproducible across platforms and
independent of Python's hash randomization.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & MASK64
    return h


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & MASK64
    z = (z ^ (z >> 27)) * _MIX2 & MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed (order-sensitive)."""
    s = _GOLDEN
    for p in parts:
        s = _mix64((s + (p & MASK64)) & MASK64)
    return s


class SplitMix64:
    """Minimal deterministic PRNG with a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return _mix64(self._state)

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample(self, seq: list, k: int) -> list:
        """k items without replacement, in draw order."""
        pool = list(seq)
        out = []
        for _ in range(min(k, len(pool))):
            j = self.next_below(len(pool))
            out.append(pool.pop(j))
        return out


def splitmix64_floats(seed: int, n: int) -> np.ndarray:
    """Vectorized stream of n uniform floats in [0, 1) from SplitMix64."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
