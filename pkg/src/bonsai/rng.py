"""Deterministic random stream with a pinned algorithm.

Scene generation must reproduce bit-identically across platforms and
library versions, so randomness comes from SplitMix64 (Steele, Lea,
Flood 2014) used in counter mode: output i is the SplitMix64 finalizer
applied to seed + (i+1) * golden gamma, all uint64 wraparound
arithmetic. Uniform doubles take the top 53 bits; normals come from
Box-Muller on two uniforms. Nothing here depends on numpy's Generator
machinery.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Rand"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):  # uint64 wraparound is the algorithm
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Rand:
    """SplitMix64 counter stream."""

    def __init__(self, seed: int):
        self._base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def _raw(self, n: int) -> np.ndarray:
        i = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            keyed = self._base + i * _GAMMA
        return _mix(keyed)

    def uniform(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """n doubles in [lo, hi)."""
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return lo + (hi - lo) * u

    def normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        """n standard-normal doubles scaled by sigma (Box-Muller)."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1], keeps the log finite
        u2 = self.uniform(m)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return sigma * z[:n]

    def integer(self, lo: int, hi: int) -> int:
        """One integer in [lo, hi]."""
        span = hi - lo + 1
        return lo + min(span - 1, int(self.uniform(1)[0] * span))

    def sample_indices(self, n_total: int, k: int) -> np.ndarray:
        """k distinct indices out of n_total, order fixed by the stream."""
        if k >= n_total:
            return np.arange(n_total, dtype=np.intp)
        keys = self.uniform(n_total)
        return np.argsort(keys, kind="stable")[:k].astype(np.intp)

    def spawn(self, tag: int) -> "Rand":
        """An independent stream derived from this seed and a tag."""
        salted = (int(self._base) ^ (tag * 0x632BE59BD9B4E019)) & 0xFFFFFFFFFFFFFFFF
        return Rand(int(_mix(np.uint64(salted))))
