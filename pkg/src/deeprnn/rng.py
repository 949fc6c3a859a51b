"""Deterministic random number generation.

Everything stochastic in the library (initialization, weight noise, sampling)
draws from :class:`Rng`, a thin wrapper around numpy's counter-based Philox
generator. A 64-bit seed plus a 64-bit stream tag form the 128-bit Philox key,
so independent substreams can be derived without consuming draws from the
parent: ``Rng(seed).substream(k)`` always denotes the same stream, regardless
of what has been drawn elsewhere. This keeps runs reproducible even if parts
of a pipeline are reordered or parallelized.
"""

from __future__ import annotations

import numpy as np


class Rng:
    """Counter-based deterministic generator (Philox 4x64).

    Identical ``(seed, stream)`` pairs produce identical draw sequences on
    every platform. Draws consume state; substreams do not.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF,
                        self.stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, tag: int) -> "Rng":
        """Fresh, statistically independent stream for the same seed."""
        return Rng(self.seed, tag)

    def normal(self, shape, std: float = 1.0) -> np.ndarray:
        """i.i.d. N(0, std^2) array; std=0 gives exact zeros."""
        if std == 0.0:
            return np.zeros(shape, dtype=np.float64)
        return self._gen.standard_normal(size=shape, dtype=np.float64) * std

    def uniform(self, shape=None) -> np.ndarray:
        return self._gen.random(size=shape, dtype=np.float64)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices drawn uniformly from range(n)."""
        return self._gen.choice(n, size=k, replace=False)

    def categorical(self, probs: np.ndarray) -> int:
        """Single draw from a probability vector (assumed to sum to 1)."""
        u = self._gen.random()
        return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))
