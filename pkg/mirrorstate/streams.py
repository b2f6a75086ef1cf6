"""
🎲 Derived Random Streams
=========================
Random draws tied to a record or a sample index come from a numpy stream
keyed by (seed, purpose, index). What record or sample i receives is then a
function of the seed and i alone, independent of batch sizes, chunking or
the order in which other indices are drawn.
"""

import numpy as np

# purposes
RECORD = 0
SHUFFLE = 1
HAAR_POOL = 2
SAMPLE = 3


def derive_seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """The child of SeedSequence(seed) at spawn key `key`."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(seed, *key))
