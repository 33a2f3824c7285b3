"""Moment and cumulant tensors of d-variate laws.

Symmetric tensors are stored once per sorted index multiset, e.g. the
order-3 entry ``(0, 0, 1)`` stands for all permutations of that index
triple.  Conversions between moments and cumulants enumerate set
partitions explicitly; orders above 8 are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

MAX_ORDER = 8


class TensorError(ValueError):
    pass


@lru_cache(maxsize=None)
def set_partitions(r: int) -> tuple:
    """All set partitions of ``range(r)`` as tuples of blocks (tuples)."""
    if r == 0:
        return ((),)
    out = []
    for part in set_partitions(r - 1):
        # put r-1 in its own block, or append it to an existing block
        out.append(part + ((r - 1,),))
        for b in range(len(part)):
            blocks = list(part)
            blocks[b] = blocks[b] + (r - 1,)
            out.append(tuple(blocks))
    return tuple(out)


def mobius_weight(nblocks: int) -> int:
    """(-1)^{b-1} (b-1)!, the coefficient of a b-block partition."""
    return (-1) ** (nblocks - 1) * math.factorial(nblocks - 1)


def multisets(d: int, r: int):
    return combinations_with_replacement(range(d), r)


@dataclass(frozen=True)
class CumulantSet:
    """Symmetric tensors of orders ``1..max_order`` over ``d`` indices.

    ``kind`` records whether the entries are raw moments or cumulants.
    """

    d: int
    max_order: int
    tensors: dict = field(repr=False)
    kind: str = "cumulant"

    def __post_init__(self):
        if self.d < 1:
            raise TensorError("dimension must be positive")
        if not 1 <= self.max_order <= MAX_ORDER:
            raise TensorError(f"max_order must lie in [1, {MAX_ORDER}]")
        for r in range(1, self.max_order + 1):
            if r not in self.tensors:
                raise TensorError(f"missing order-{r} tensor")

    def get(self, *idx) -> float:
        if len(idx) == 1 and isinstance(idx[0], (tuple, list)):
            idx = tuple(idx[0])
        r = len(idx)
        if r > self.max_order:
            raise TensorError(f"order {r} exceeds max_order {self.max_order}")
        return self.tensors[r].get(tuple(sorted(idx)), 0.0)

    def tensor(self, r: int) -> np.ndarray:
        """Dense symmetric order-``r`` tensor."""
        if not 1 <= r <= self.max_order:
            raise TensorError(f"order {r} not stored")
        T = np.empty((self.d,) * r)
        for idx in np.ndindex(*T.shape):
            T[idx] = self.tensors[r].get(tuple(sorted(idx)), 0.0)
        return T

    def mean(self) -> np.ndarray:
        return self.tensor(1)

    def covariance(self) -> np.ndarray:
        return self.tensor(2)

    def truncated(self, max_order: int) -> "CumulantSet":
        return CumulantSet(
            self.d, max_order, {r: dict(self.tensors[r]) for r in range(1, max_order + 1)}, self.kind
        )

    def replace(self, r: int, entries: dict) -> "CumulantSet":
        """Copy with the order-``r`` entries overridden (keys are sorted multisets)."""
        tensors = {k: dict(v) for k, v in self.tensors.items()}
        for idx, val in entries.items():
            tensors[r][tuple(sorted(idx))] = float(val)
        return CumulantSet(self.d, self.max_order, tensors, self.kind)

    @classmethod
    def from_dense(cls, tensors, kind="cumulant") -> "CumulantSet":
        """Build from a list ``[T1, T2, ...]`` of dense tensors (order r at position r-1).

        Non-symmetric input is symmetrized by averaging over permutations.
        """
        tensors = [np.asarray(T, dtype=float) for T in tensors]
        d = tensors[0].shape[0] if tensors[0].ndim else 1
        out = {}
        for r, T in enumerate(tensors, start=1):
            T = T.reshape((d,) * r)
            entries = {}
            for idx in multisets(d, r):
                perms = set(_permutations(idx))
                entries[idx] = float(np.mean([T[p] for p in perms]))
            out[r] = entries
        return cls(d, len(tensors), out, kind)

    @classmethod
    def univariate(cls, values, kind="cumulant") -> "CumulantSet":
        """d = 1 convenience: ``values[r-1]`` is the order-r entry."""
        return cls(1, len(values), {r: {(0,) * r: float(v)} for r, v in enumerate(values, 1)}, kind)

    def is_symmetric(self) -> bool:
        return all(len(k) == r and tuple(sorted(k)) == k for r in self.tensors for k in self.tensors[r])

    def values(self, r: int) -> list:
        return [self.get(idx) for idx in multisets(self.d, r)]


def _permutations(idx):
    from itertools import permutations

    return permutations(idx)


def empirical_moments(sample, max_order: int, center=None) -> CumulantSet:
    """Raw (or centered, when ``center`` is given) sample moments.

    The order-r entry for ``(j1..jr)`` is ``mean_i prod_s (X_i - center)_{js}``.
    """
    X = np.asarray(sample, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise TensorError("empty sample")
    if max_order < 1:
        raise TensorError("max_order must be at least 1")
    if max_order > MAX_ORDER:
        raise TensorError(f"max_order above {MAX_ORDER} not supported")
    d = X.shape[1]
    if center is not None:
        X = X - np.asarray(center, dtype=float).reshape(1, d)
    tensors = {}
    for r in range(1, max_order + 1):
        tensors[r] = {idx: float(np.mean(np.prod(X[:, list(idx)], axis=1))) for idx in multisets(d, r)}
    return CumulantSet(d, max_order, tensors, "moment")


def _convert(src: CumulantSet, to_cumulants: bool) -> CumulantSet:
    if src.max_order < 2:
        raise TensorError("conversion needs max_order >= 2")
    out = {}
    for r in range(1, src.max_order + 1):
        parts = set_partitions(r)
        entries = {}
        for idx in multisets(src.d, r):
            acc = 0.0
            for part in parts:
                prod = float(mobius_weight(len(part))) if to_cumulants else 1.0
                for block in part:
                    prod *= src.get(tuple(idx[p] for p in block))
                acc += prod
            entries[idx] = acc
        out[r] = entries
    return CumulantSet(src.d, src.max_order, out, "cumulant" if to_cumulants else "moment")


def moments_to_cumulants(moments: CumulantSet) -> CumulantSet:
    """Joint cumulants from raw moments via the set-partition (Mobius) formula."""
    return _convert(moments, to_cumulants=True)


def cumulants_to_moments(cumulants: CumulantSet) -> CumulantSet:
    """Raw moments from cumulants: sum over partitions of products of block cumulants."""
    return _convert(cumulants, to_cumulants=False)


def sample_cumulants(sample, max_order: int) -> CumulantSet:
    """Cumulants of the empirical distribution (1/n normalisation).

    The order-1 entry is the sample mean; higher orders are computed from
    moments about the mean, which is numerically kinder than raw moments.
    """
    X = np.asarray(sample, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    mean = X.mean(axis=0)
    central = moments_to_cumulants(empirical_moments(X, max_order, center=mean))
    tensors = {r: dict(central.tensors[r]) for r in central.tensors}
    tensors[1] = {(j,): float(mean[j]) for j in range(X.shape[1])}
    return CumulantSet(X.shape[1], max_order, tensors, "cumulant")


def gaussian_moments(mu, sigma, max_order: int) -> CumulantSet:
    """Exact raw moments of N(mu, sigma) up to ``max_order`` (via cumulants)."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    d = mu.shape[0]
    tensors = {1: {(i,): float(mu[i]) for i in range(d)}}
    for r in range(2, max_order + 1):
        tensors[r] = {idx: (float(sigma[idx]) if r == 2 else 0.0) for idx in multisets(d, r)}
    return cumulants_to_moments(CumulantSet(d, max_order, tensors, "cumulant"))


def contract(T, M) -> np.ndarray:
    """Apply the linear map ``M`` (shape (p, d)) to every index of the dense tensor ``T``."""
    T = np.asarray(T, dtype=float)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    for axis in range(T.ndim):
        T = np.moveaxis(np.tensordot(M, T, axes=([1], [axis])), 0, axis)
    return T
