"""Seeded, splittable random streams.

Every source of randomness in the package flows through :class:`RngStream`,
a value type naming a (seed, path) pair.  Streams are backed by the Philox
counter-based generator, so the same (seed, path) yields the same sequence
on any platform and any evaluation order.  There is no module-level RNG
state anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALGORITHM = "philox4x64"


@dataclass(frozen=True)
class RngStream:
    """A named position in the global stream tree.

    ``child(i, j, ...)`` derives an independent substream; calling
    ``generator()`` always restarts at the stream's origin, so a stream
    object can be passed around like a value.
    """

    seed: int
    path: tuple[int, ...] = field(default_factory=tuple)
    algorithm: str = ALGORITHM

    def child(self, *indices: int) -> "RngStream":
        return RngStream(self.seed, self.path + indices, self.algorithm)

    def generator(self) -> np.random.Generator:
        if self.algorithm != ALGORITHM:
            raise ValueError(f"unknown RNG algorithm {self.algorithm!r}")
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self.generator().uniform(low, high, size)

    def standard_normal(self, size) -> np.ndarray:
        return self.generator().standard_normal(size)
