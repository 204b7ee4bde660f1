"""Labelled, order-independent random streams derived from one master seed."""
from __future__ import annotations

import numpy as np


def stream(seed: int, *labels: int) -> np.random.Generator:
    """Return a PCG64 generator for ``(seed, *labels)``.

    Streams with different label tuples are statistically independent, and the
    same tuple always yields the same stream regardless of call order.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))
