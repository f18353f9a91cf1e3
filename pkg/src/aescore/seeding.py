"""Deterministic seed derivation shared by training, dropout, and data shuffling."""

from __future__ import annotations

import numpy as np

# Stream tags keep independently derived seeds from colliding.
STREAM_EPOCH = 1
STREAM_STEP = 2
STREAM_DROPOUT = 3
STREAM_INIT = 4
STREAM_TREE = 5


def derive_seed(*parts: int) -> int:
    """Mix integer parts into one 32-bit seed, stable across runs and platforms."""
    for p in parts:
        if p < 0:
            raise ValueError(f"seed parts must be non-negative, got {p}")
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])
