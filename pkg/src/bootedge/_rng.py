"""Seed derivation and block-parallel helpers.

Every random stream is derived from a master seed plus integer keys through
``numpy.random.SeedSequence``.  Work is cut into blocks of a fixed size that
does not depend on the worker count, so results are bit-identical for any
``jobs`` value.
"""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BLOCK = 1 << 15


def tag(name: str) -> int:
    return zlib.crc32(name.encode())


def derive(seed: int, *keys) -> np.random.Generator:
    ints = [int(seed)] + [tag(k) if isinstance(k, str) else int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(ints)))


def subseed(seed: int, *keys) -> int:
    """A 63-bit integer seed for a named sub-experiment."""
    ints = [int(seed)] + [tag(k) if isinstance(k, str) else int(k) for k in keys]
    return int(np.random.SeedSequence(ints).generate_state(2, np.uint64)[0] >> np.uint64(1))


def blocks(total: int, size: int = DEFAULT_BLOCK):
    """``(index, start, stop)`` for fixed-size blocks covering ``range(total)``."""
    return [(b, s, min(s + size, total)) for b, s in enumerate(range(0, total, size))]


def map_blocks(fn, items, jobs: int = 1):
    """``[fn(item) for item in items]``, optionally on a thread pool; order is preserved."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
