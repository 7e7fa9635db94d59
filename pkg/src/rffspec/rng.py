"""Seedable random streams.

Every sampling routine takes an explicit integer seed and a stream id. The
pair is hashed through :class:`numpy.random.SeedSequence` into a Philox
counter-based generator, so ``(seed, stream)`` pairs give independent,
reproducible streams that can be consumed from different threads.
"""

import numpy as np

# Stream ids used by the experiment harness. Library callers may use any
# non-negative integer.
FEATURES = 0
NOISE = 1
SAMPLER = 2
CERTIFICATES = 3


def make_rng(seed, stream=0):
    """Return a fresh ``numpy.random.Generator`` for ``(seed, stream)``."""
    if isinstance(seed, np.random.Generator):
        return seed
    seed = int(seed)
    stream = int(stream)
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))
