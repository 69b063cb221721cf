"""Seedable random streams.

All stochastic code draws from Philox, a counter-based generator, so that
independent streams can be derived from (seed, stream) pairs without any
cross-talk and results are stable across platforms and process boundaries.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError

# fixed stream labels so callers cannot collide by accident
STREAM_SIMULATE = 1
STREAM_NOISE = 2
STREAM_CV = 3
STREAM_TRANSITION = 4
STREAM_STUDY = 5


def stream(seed: int, label: int = 0, index: int = 0) -> np.random.Generator:
    """Return a Generator for the (seed, label, index) triple.

    The same triple always yields the same stream; distinct triples yield
    independent streams.
    """
    if seed is None:
        raise UsageError("a seed is required for stochastic operations")
    seed = int(seed)
    if seed < 0:
        raise UsageError("seed must be a non-negative integer")
    key = np.array([seed, (int(label) << 32) | (int(index) & 0xFFFFFFFF)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
