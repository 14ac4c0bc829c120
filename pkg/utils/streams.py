"""
Deterministic random streams.
Every stochastic routine derives its generator from a master seed plus integer keys.
"""

from typing import Union

import numpy as np

SEED_MASK = (1 << 64) - 1

RandomSource = Union[int, np.random.Generator]


def _entropy(seed: int, keys) -> list:
    """Build SeedSequence entropy from a seed and keys."""
    return [int(seed) & SEED_MASK] + [int(k) & SEED_MASK for k in keys]


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Get the generator for (seed, keys)."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """Get a 64-bit child seed for (seed, keys)."""
    words = np.random.SeedSequence(_entropy(seed, keys)).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def as_generator(source: RandomSource) -> np.random.Generator:
    """Accept either a seed or a ready generator."""
    if isinstance(source, np.random.Generator):
        return source
    return derive_rng(source)


def block_ranges(count: int, block_size: int):
    """Yield (block_index, start, stop) covering range(count)."""
    for block, start in enumerate(range(0, count, block_size)):
        yield block, start, min(start + block_size, count)


# Top-level stream keys; a run derives every stage's seed as derive_seed(seed, key)
STREAM_GRAPH = 1
STREAM_NETWORKS = 2
STREAM_RR = 3
STREAM_ROUNDING = 4
STREAM_SIMULATION = 5
