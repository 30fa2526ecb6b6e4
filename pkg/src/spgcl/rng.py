"""Seeded random streams.

Every random draw in the package goes through ``numpy.random.Generator``
backed by PCG64, seeded from a 64-bit integer. PCG64 and numpy's sampling
routines are platform-independent, so equal seeds give equal outputs.
Sub-streams are derived with ``SeedSequence.spawn`` so that e.g. graph
wiring and feature noise never share a stream.
"""
from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & SEED_MASK)))


def spawn(seed, n: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(int(seed) & SEED_MASK)
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(n)]
