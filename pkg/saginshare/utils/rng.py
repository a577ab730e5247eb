"""Seeded random stream helpers."""

from typing import Dict

import numpy as np

# Independent purposes drawn from one experiment seed
STREAM_IDS: Dict[str, int] = {
    "placement": 1,
    "ground": 2,
    "satellite": 3,
}


def named_stream(seed: int, name: str) -> np.random.Generator:
    """
    Create the generator for one purpose of a seed.

    Args:
        seed: Experiment seed (64-bit)
        name: Stream purpose, one of STREAM_IDS

    Returns:
        Generator whose draws depend only on (seed, name)
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, STREAM_IDS[name]])
