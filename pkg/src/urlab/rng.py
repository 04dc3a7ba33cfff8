"""Seeded random streams.

All randomness in urlab flows through :class:`RandomSource`, a thin buffered
front end over numpy's counter-based Philox bit generator. Draws are taken
in blocks so that the scalar calls made inside tree search stay cheap. The
stream for a given seed is fixed by numpy's Philox/SeedSequence definitions,
which numpy keeps stable across releases.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 4096


class RandomSource:
    """Scalar random draws from a Philox stream.

    ``RandomSource(seed)`` and ``RandomSource(seed, stream=k)`` for different
    ``k`` are statistically independent streams.
    """

    def __init__(self, seed: int = 0, stream: int | tuple = ()):
        self.seed = int(seed)
        self.stream = (int(stream),) if isinstance(stream, int) else tuple(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf: list[float] = []
        self._i = 0

    def _refill(self) -> None:
        self._buf = self._gen.random(_BLOCK).tolist()
        self._i = 0

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        i = self._i
        if i >= len(self._buf):
            self._refill()
            i = 0
        self._i = i + 1
        return self._buf[i]

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        k = int(self.random() * n)
        return k if k < n else n - 1

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def categorical(self, probs) -> int:
        """Index drawn with probability proportional to ``probs``."""
        total = 0.0
        for p in probs:
            total += p
        u = self.random() * total
        acc = 0.0
        last = 0
        for i, p in enumerate(probs):
            if p > 0.0:
                acc += p
                last = i
                if u < acc:
                    return i
        return last

    def spawn(self, stream: int) -> "RandomSource":
        """An independent stream sharing this source's seed."""
        return RandomSource(self.seed, stream=self.stream + (int(stream),))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"
