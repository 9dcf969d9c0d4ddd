"""Seeded random streams.

Every replication in a study owns an independent substream derived from the
root seed and a tuple of integer keys, so runs are repeatable and can be
split across workers without coordination.
"""
from __future__ import annotations

import numbers
import zlib

import numpy as np


def check_random_state(seed=None) -> np.random.Generator:
    """Turn `seed` into a `numpy.random.Generator`.

    ``None`` gives fresh OS entropy, an integer seeds a new PCG64 generator and
    an existing ``Generator`` is returned unchanged.
    """
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy.random.Generator")


def name_key(name: str) -> int:
    """Stable 32-bit integer for a label (study or scheme name)."""
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, *keys: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))
