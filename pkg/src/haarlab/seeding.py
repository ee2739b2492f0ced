"""Deterministic, splittable random streams.

Every sampler in the package is a pure function of its arguments and a
:class:`Seed`.  A seed is a pair ``(master, stream_index)`` of 64-bit
unsigned integers feeding a Philox4x64 counter-based generator through
``numpy.random.SeedSequence``.  Splitting is by spawn key extension:
``Seed(m, s).child(j)`` keys the sequence with ``(s, j)``, so distinct
stream indices (or child paths) give statistically independent streams
while identical paths reproduce bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class Seed:
    """Key of a reproducible random stream."""

    master: int
    stream_index: int = 0
    _path: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (0 <= int(self.master) < _U64 and 0 <= int(self.stream_index) < _U64):
            raise ValueError("master and stream_index must be unsigned 64-bit integers")

    def child(self, *indices: int) -> "Seed":
        """Seed of an independent sub-stream (documented splitting function)."""
        return Seed(self.master, self.stream_index, self._path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(
            entropy=int(self.master),
            spawn_key=(int(self.stream_index),) + self._path,
        )
        return np.random.Generator(np.random.Philox(ss))

    def label(self) -> str:
        suffix = "".join(f".{i}" for i in self._path)
        return f"{self.master}:{self.stream_index}{suffix}"
