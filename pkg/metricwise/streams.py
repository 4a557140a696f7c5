"""
Seeded random streams.

Every random draw in the package comes from a Philox counter-based generator keyed
by a base seed and a spawn path. The first path element names the consumer
(pool simulation, harness repetition, online round) and the rest index within it,
so two consumers never share a stream and results do not depend on the order in
which streams are created.
"""

from __future__ import annotations

import numpy as np

from .const import LOGGER

_SEED_MASK = (1 << 64) - 1


def make_generator(seed: int, *path: int) -> np.random.Generator:
    """
    Create the generator for a seed and spawn path.

    Args:
        seed: Base seed (reduced to 64 bits).
        path: Nonnegative integers naming the substream.

    Returns:
        A numpy Generator backed by Philox.

    """
    sequence = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=tuple(path))
    LOGGER.debug("Opened stream seed=%d path=%s", seed, path)
    return np.random.Generator(np.random.Philox(sequence))
