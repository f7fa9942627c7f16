"""Per-replicate random streams.

Replicate ``i`` under master seed ``m`` draws from
``PCG64(SeedSequence(m, spawn_key=(i,)))``. The stream depends only on
``(m, i)``, never on scheduling or on how replicates are grouped into workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR_NAME = "numpy.random.PCG64 via SeedSequence(master_seed, spawn_key=(replicate_index,))"


@dataclass(frozen=True)
class ReplicateSeed:
    master_seed: int
    replicate_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        return replicate_generator(self.master_seed, self.replicate_index)


def replicate_generator(master_seed: int, replicate_index: int, stream: int = 0) -> np.random.Generator:
    """Generator for one replicate; ``stream`` separates independent uses of the same index."""
    key = (int(replicate_index),) if stream == 0 else (int(replicate_index), int(stream))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=key)))


def as_generator(seed) -> np.random.Generator:
    """Accept a ReplicateSeed, an int master seed (replicate 0) or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, ReplicateSeed):
        return seed.generator()
    return replicate_generator(int(seed), 0)


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for a named sub-experiment, a pure function of ``(master_seed, keys)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])
