"""Random streams for reproducible simulation.

Every path draws from a counter-based Philox generator seeded through a
SeedSequence. Stream k of seed s is SeedSequence(s, spawn_key=(k,)), which
is exactly what SeedSequence(s).spawn(...)[k] yields, so parallel paths
are reproducible no matter which worker runs them.
"""

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for stream `stream` of `seed` (64-bit seeds accepted)."""
    sequence = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [make_rng(seed, stream) for stream in range(count)]
