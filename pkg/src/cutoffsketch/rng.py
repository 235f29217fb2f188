"""Keyed, reproducible random streams.

Every consumer in the package draws from a :class:`UniformSource`, a buffered
reader over a Philox counter-based generator.  A source is identified by a
seed plus an integer key path, so independent streams (one per sketch
instance, one per Monte Carlo trial, one for stream generation) are derived
without any shared state.

Batching does not change the sequence: ``take(n)`` returns exactly the next
``n`` values that ``n`` calls to ``random()`` would have produced.
"""

from __future__ import annotations

import numpy as np

RNG_VERSION = "philox4x64/seedsequence/v1"

# Key namespaces so streams for different purposes never collide.
SKETCH_KEY = 0
STREAM_KEY = 1
HARNESS_KEY = 2


def make_generator(seed: int, *key: int) -> np.random.Generator:
    """Return a numpy Generator for the stream named by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


class UniformSource:
    """Buffered 53-bit uniforms in [0, 1) from a keyed Philox stream."""

    __slots__ = ("seed", "key", "_gen", "_buf", "_pos", "_chunk")

    def __init__(self, seed: int, *key: int, chunk: int = 4096):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._gen = make_generator(self.seed, *self.key)
        self._chunk = chunk
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        pos = self._pos
        if pos == len(self._buf):
            self._buf = self._gen.random(self._chunk).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms as a float64 array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        left = self._buf[self._pos:]
        if n <= len(left):
            self._pos += n
            return np.asarray(left[:n], dtype=np.float64)
        self._buf, self._pos = [], 0
        rest = self._gen.random(n - len(left))
        return np.concatenate([np.asarray(left, dtype=np.float64), rest])

    def bernoulli(self, p: float) -> bool:
        """One Ber(p) draw; always consumes exactly one uniform."""
        return self.random() < p

    def __repr__(self) -> str:
        return f"UniformSource(seed={self.seed}, key={self.key})"
