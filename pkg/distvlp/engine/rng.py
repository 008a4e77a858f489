"""Counter-based seeded randomness with independent named streams."""

from __future__ import annotations

from enum import IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

_U64 = 2 ** 64


class Streams(IntEnum):
    INIT = 1
    CORPUS = 2
    MASK = 3
    SAMPLE = 4
    ITM = 5
    SHUFFLE = 6
    HSD = 7
    VIZ = 8


class SeededRng:
    """Philox generator keyed by ``(seed, stream_id, *path)``.

    Two instances built from the same key produce the same draws on every
    platform, whatever other streams have been consumed in between.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: Tuple[int, ...] = ()):
        if not 0 <= int(seed) < _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        if not 0 <= int(stream_id) < _U64:
            raise ValueError(f"stream_id must be an unsigned 64-bit integer, got {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(p) for p in _path)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,) + self._path)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def child(self, index: int) -> "SeededRng":
        """Derived stream, e.g. one per example or per permutation chunk."""
        return SeededRng(self.seed, self.stream_id, self._path + (int(index),))

    def stream(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.seed, int(stream_id))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def normal(self, shape: Sequence[int]) -> np.ndarray:
        return self._generator.standard_normal(tuple(shape))

    def uniform(self, shape: Sequence[int]) -> np.ndarray:
        return self._generator.random(tuple(shape))

    def integers(self, low: int, high: int, size: Optional[Sequence[int]] = None) -> np.ndarray:
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def truncated_normal(self, shape: Sequence[int], std: float, bound: float = 2.0) -> np.ndarray:
        """N(0, std²) truncated at ±bound·std."""
        return stats.truncnorm.rvs(-bound, bound, loc=0.0, scale=std, size=tuple(shape), random_state=self._generator)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream_id={self.stream_id}, path={self._path})"
