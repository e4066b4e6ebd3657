"""Seeded random streams.

One root seed plus a counter-derived stream id gives every replication its
own generator, so replications can run in any order (or in parallel) and
still reproduce the same draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Calling :meth:`generator` twice returns two generators producing the
    same draws. Sub-streams are derived with :meth:`substream` and are
    statistically independent of their parent and of each other.
    """

    seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)
        object.__setattr__(self, "path", tuple(int(p) & _MASK64 for p in self.path))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def substream(self, j: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (j,))

    def with_stream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Coerce a stream, generator, integer seed or ``None`` to a Generator.

    A Generator is returned as-is so that callers can thread one generator
    through several draws.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)
