from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def replication_rng(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based stream for one replication, independent of scheduling.

    ``stream`` separates independent families of replications under one master seed.
    """
    key = (int(index),) if stream == 0 else (int(stream), int(index))
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(sequence))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
