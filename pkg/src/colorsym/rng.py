"""Reproducible random streams.

Python-level code draws from a Philox (counter-based) ``numpy`` generator
keyed by ``(seed, stream, *path)``.  Compiled batch kernels run one xoshiro256**
state per replica; replica ``i`` of stream ``(seed, stream)`` is seeded by
splitmix64 from a key drawn out of ``SeedSequence(seed, spawn_key=(stream,))``
and the replica index, so results never depend on chunking or ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

_U53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class RngStream:
    """Named stream ``(seed, stream)``; ``child`` extends the spawn key."""

    seed: int
    stream: int = 0
    path: tuple = ()

    def _seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.stream,) + self.path)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self._seed_sequence()))

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream, e.g. one per side of a two-sample test."""
        return RngStream(self.seed, self.stream, self.path + (int(index),))

    def replica_states(self, start: int, count: int) -> np.ndarray:
        key = self._seed_sequence().generate_state(1, np.uint64)[0]
        return _seed_states(np.uint64(key), np.int64(start), np.int64(count))


@nb.njit(cache=True, inline="always")
def _splitmix(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    z = x
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x, z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def _seed_states(key, start, count):
    out = np.empty((count, 4), np.uint64)
    for r in range(count):
        x = key ^ (np.uint64(start + r) * np.uint64(0xD1B54A32D192ED03))
        for j in range(4):
            x, z = _splitmix(x)
            out[r, j] = z
    return out


@nb.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit(cache=True, inline="always")
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(cache=True, inline="always")
def uniform(s):
    """Uniform double in [0, 1)."""
    return (next_u64(s) >> np.uint64(11)) * _U53
