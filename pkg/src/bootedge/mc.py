"""Blocked Monte Carlo averaging with deterministic seeding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from bootedge._rng import DEFAULT_BLOCK, blocks, derive, map_blocks


class Estimate(NamedTuple):
    value: float
    se: float

    def within(self, target, k=3.0, atol=0.0):
        return abs(self.value - target) <= k * self.se + atol


@dataclass(frozen=True)
class MCConfig:
    samples: int = 1_000_000
    seed: int = 0
    block: int = DEFAULT_BLOCK
    jobs: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("Monte Carlo budget must be positive")
        if self.block < 1:
            raise ValueError("block size must be positive")


def block_sums(sampler, fn, mc: MCConfig, stream="mc"):
    """Per-block ``(sum, sum of squares, count)`` of ``fn(sampler(rng, size))``.

    ``fn`` may return shape ``(N,)`` or ``(N, m)``.
    """

    def run(blk):
        b, start, stop = blk
        rng = derive(mc.seed, stream, b)
        vals = np.asarray(fn(sampler(rng, stop - start)), dtype=float)
        return vals.sum(axis=0), (vals * vals).sum(axis=0), stop - start

    parts = map_blocks(run, blocks(mc.samples, mc.block), mc.jobs)
    s = parts[0][0] * 0.0
    ss = parts[0][1] * 0.0
    count = 0
    for ps, pss, c in parts:
        s = s + ps
        ss = ss + pss
        count += c
    return s, ss, count


def mean_estimate(sampler, fn, mc: MCConfig, stream="mc"):
    """Monte Carlo mean with standard error; vector-valued ``fn`` gives arrays."""
    s, ss, count = block_sums(sampler, fn, mc, stream)
    mean = s / count
    var = np.maximum(ss / count - mean * mean, 0.0) * count / max(count - 1, 1)
    se = np.sqrt(var / count)
    if np.ndim(mean) == 0:
        return Estimate(float(mean), float(se))
    return [Estimate(float(m), float(e)) for m, e in zip(mean, se)]


def gaussian_sampler(V):
    """Sampler for N(0, V) in the shape ``(size, q)``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    L = np.linalg.cholesky(V)

    def sample(rng, size):
        return rng.standard_normal((size, V.shape[0])) @ L.T

    return sample
