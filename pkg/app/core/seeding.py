"""
Deterministic random streams.
Every sampled quantity is drawn from a numpy generator spawned from (seed, stream...).
"""

import numpy as np


def _entropy_word(value: int) -> int:
    """Fold a signed stream index into the non-negative words SeedSequence accepts."""
    return 2 * value if value >= 0 else -2 * value - 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Build a generator for an independent, reproducible stream.

    Args:
        seed: Base seed of the run (>= 0)
        stream: Extra integers identifying the stream (suite index, sample index, ...)

    Returns:
        numpy Generator
    """
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    words = [seed, *(_entropy_word(int(s)) for s in stream)]
    return np.random.default_rng(np.random.SeedSequence(words))


def draw_int(rng: np.random.Generator, low: int, high: int) -> int:
    """Uniform integer in [low, high) as a Python int."""
    return int(rng.integers(low, high))
