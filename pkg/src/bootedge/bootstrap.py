"""k-sample bootstrap: Monte Carlo and exact resampling laws, truncation, product measures.

Throughout, ``n = n_1 + ... + n_k`` and the bootstrapped quantity is
``n^{1/2} A(Xbar*_1, ..., Xbar*_k; Xbar_1, ..., Xbar_k)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from bootedge._rng import blocks, derive, map_blocks
from bootedge.mc import Estimate
from bootedge.regions import Ball, contains
from bootedge.smooth_model import DegenerateStatistic, SmoothStatistic, sym_power

BOOT_BLOCK = 8192
EXACT_MAX_N = 8


class SampleError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSet:
    """k samples of d-vectors.  ``provenance`` is ``(population, seed)`` or ``"external"``."""

    samples: tuple = field(repr=False)
    provenance: object = "external"

    def __post_init__(self):
        arrs = []
        for s in self.samples:
            a = np.array(s, dtype=float)
            a = a.reshape(len(a), -1)
            a.setflags(write=False)
            arrs.append(a)
        if not arrs:
            raise SampleError("need at least one sample")
        if len({a.shape[1] for a in arrs}) != 1:
            raise SampleError("all samples must share the dimension d")
        if min(len(a) for a in arrs) < 2:
            raise SampleError("every sample needs n_j >= 2")
        object.__setattr__(self, "samples", tuple(arrs))

    @property
    def k(self):
        return len(self.samples)

    @property
    def d(self):
        return self.samples[0].shape[1]

    @property
    def n_js(self):
        return [len(s) for s in self.samples]

    @property
    def n(self):
        return sum(self.n_js)

    @property
    def balance(self):
        """``max(n_j) / min(n_j)``."""
        return max(self.n_js) / min(self.n_js)

    def means(self):
        return [s.mean(axis=0) for s in self.samples]

    @classmethod
    def simulate(cls, population, n_js, seed, stream="sample"):
        """Draw sample j from ``population`` with a stream derived from ``(seed, stream, j)``."""
        samples = [population.sample(derive(seed, stream, j), int(m)) for j, m in enumerate(n_js)]
        return cls(tuple(samples), (population.name, seed))

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_id"] + [f"x{i + 1}" for i in range(self.d)])
            for j, s in enumerate(self.samples):
                for row in s:
                    w.writerow([j] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:1] != ["sample_id"]:
            raise SampleError(f"{path}: header row 'sample_id,x1,...' required")
        header = rows[0]
        d = len(header) - 1
        if d < 1 or header[1:] != [f"x{i + 1}" for i in range(d)]:
            raise SampleError(f"{path}: columns must be sample_id,x1..x{max(d, 1)}")
        groups = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise SampleError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                groups.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise SampleError(f"{path}:{lineno}: {exc}") from None
        ids = sorted(groups)
        if ids != list(range(len(ids))):
            raise SampleError(f"{path}: sample ids must be 0..k-1, got {ids}")
        return cls(tuple(np.array(groups[j]) for j in ids), "external")


def resample(sset: SampleSet, seed) -> SampleSet:
    """Draw each sample with replacement from itself (uniform weights)."""
    out = []
    for j, s in enumerate(sset.samples):
        rng = derive(seed, "resample", j)
        out.append(s[rng.integers(0, len(s), size=len(s))])
    return SampleSet(tuple(out), sset.provenance)


def _lifted(stat: SmoothStatistic, sset: SampleSet):
    data = [s if stat.lift is None else np.asarray(stat.lift(s), dtype=float) for s in sset.samples]
    if stat.k != sset.k:
        raise SampleError(f"statistic {stat.name} needs k={stat.k} samples, got {sset.k}")
    if any(a.shape[1] != stat.d for a in data):
        raise SampleError(f"statistic {stat.name} expects d={stat.d} after lifting")
    return data


@dataclass(frozen=True)
class BootstrapDistribution:
    reps: int
    values: np.ndarray = field(repr=False)
    seed: int = 0

    def probability(self, B: Ball) -> Estimate:
        p = float(np.mean(contains(B, self.values)))
        return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / self.reps))

    def cdf(self, t):
        """Empirical ``P(value <= t)`` for q = 1, vectorised over ``t``."""
        v = np.sort(self.values[:, 0])
        return np.searchsorted(v, np.asarray(t, dtype=float), side="right") / self.reps


def bootstrap_distribution(stat: SmoothStatistic, sset: SampleSet, reps: int, seed: int,
                           jobs: int = 1, block: int = BOOT_BLOCK) -> BootstrapDistribution:
    """Monte Carlo law of ``n^{1/2} A`` at resampled means, conditional on the data.

    Replicates are generated in fixed-size blocks, each with its own stream
    derived from ``(seed, block index)``; the result does not depend on ``jobs``.
    """
    if reps < 1:
        raise SampleError("reps must be positive")
    data = _lifted(stat, sset)
    anchors = [a.mean(axis=0) for a in data]
    root_n = math.sqrt(sset.n)

    def run(blk):
        b, start, stop = blk
        size = stop - start
        means = []
        for j, X in enumerate(data):
            rng = derive(seed, "bootstrap", b, j)
            m = len(X)
            counts = rng.multinomial(m, np.full(m, 1.0 / m), size=size)
            means.append(counts @ X / m)
        with np.errstate(all="ignore"):
            return root_n * stat(means, anchors)

    parts = map_blocks(run, blocks(reps, block), jobs)
    values = np.vstack([np.asarray(p, dtype=float).reshape(-1, stat.q) for p in parts])
    values.setflags(write=False)
    return BootstrapDistribution(reps, values, seed)


# -- exact enumeration ----------------------------------------------------------

def compositions(n: int):
    """Resample count vectors of n atoms with their exact probabilities.

    Returns ``(counts, weights)`` with ``counts`` an ``(M, n)`` integer array
    and ``weights`` a list of :class:`fractions.Fraction` summing to 1.
    """
    if n > EXACT_MAX_N:
        raise SampleError(f"exact enumeration limited to n <= {EXACT_MAX_N}")
    rows = []
    weights = []
    total = n**n
    fact_n = math.factorial(n)
    for combo in combinations_with_replacement(range(n), n):
        c = np.bincount(combo, minlength=n)
        rows.append(c)
        weights.append(Fraction(fact_n // math.prod(math.factorial(int(m)) for m in c), total))
    return np.array(rows), weights


def exact_law(stat: SmoothStatistic, sset: SampleSet):
    """Atoms and exact weights of ``n^{1/2} A`` for a single small sample."""
    if sset.k != 1:
        raise SampleError("exact enumeration is for a single sample")
    data = _lifted(stat, sset)
    X = data[0]
    counts, weights = compositions(len(X))
    means = counts @ X / len(X)
    with np.errstate(all="ignore"):
        vals = math.sqrt(sset.n) * stat([means], [X.mean(axis=0)])
    return np.asarray(vals, dtype=float).reshape(-1, stat.q), weights


def _exact_probability(vals, weights, B):
    inside = contains(B, vals)
    return sum((w for w, z in zip(weights, inside) if z), Fraction(0))


def exact_bootstrap_cdf(stat: SmoothStatistic, sset: SampleSet, grid, as_fraction=False):
    """Exact conditional probabilities of each region in ``grid``."""
    vals, weights = exact_law(stat, sset)
    out = [_exact_probability(vals, weights, B) for B in grid]
    return out if as_fraction else [float(p) for p in out]


# -- truncation -----------------------------------------------------------------

@dataclass(frozen=True)
class TruncationReport:
    """Per-sample truncation output; lists are indexed by sample."""

    Vhat: list = field(repr=False)
    Vdagger: list = field(repr=False)
    Ymeans: list = field(repr=False)
    a: np.ndarray = field(repr=False)
    truncation_fraction: list = field(default_factory=list)
    atoms: list = field(default_factory=list, repr=False)
    convention: str = "keep_small"


CONVENTIONS = ("keep_small", "keep_large")


def truncate_and_center(sset: SampleSet, convention: str = "keep_small", threshold=None) -> TruncationReport:
    """Standardise, truncate and recentre the atoms of every sample.

    Atom ``i`` of sample ``j`` becomes ``Z = Vhat_j^{-1/2}(X_i - Xbar_j)``; under
    ``keep_small`` it is kept when ``||Z|| <= threshold`` and zeroed otherwise
    (``keep_large`` swaps the roles).  ``threshold`` defaults to ``n_j^{1/2}``.
    ``E(Y | X)`` is the exact atom average and ``X_dagger = Y - E(Y | X)``.
    """
    if convention not in CONVENTIONS:
        raise SampleError(f"convention must be one of {CONVENTIONS}")
    Vhat, Vdag, Ym, frac, atoms = [], [], [], [], []
    for X in sset.samples:
        m = len(X)
        Xc = X - X.mean(axis=0)
        V = Xc.T @ Xc / m
        try:
            inv_root = sym_power(V, -0.5)
        except DegenerateStatistic:
            raise SampleError("sample covariance is singular") from None
        Z = Xc @ inv_root
        t = math.sqrt(m) if threshold is None else float(threshold)
        norms = np.linalg.norm(Z, axis=1)
        keep = norms <= t if convention == "keep_small" else norms > t
        Y = np.where(keep[:, None], Z, 0.0)
        EY = Y.mean(axis=0)
        Xd = Y - EY
        Vhat.append(V)
        Vdag.append(Xd.T @ Xd / m)
        Ym.append(EY)
        frac.append(float(np.mean(~keep)))
        atoms.append(Xd)
    roots = [sym_power(V, 0.5) for V in Vhat]
    a = -math.sqrt(sset.n) * np.concatenate([R @ e for R, e in zip(roots, Ym)])
    return TruncationReport(Vhat, Vdag, Ym, a, frac, atoms, convention)


# -- product measures -------------------------------------------------------------

def _factor(atoms, S: Ball, exact: bool, reps: int, seed, j):
    """P(n_j^{-1/2} sum of n_j draws from ``atoms`` lies in S)."""
    if S.is_whole:
        return 1.0
    m = len(atoms)
    if exact:
        counts, weights = compositions(m)
        return float(_exact_probability(counts @ atoms / math.sqrt(m), weights, S))
    rng = derive(seed, "product", j)
    counts = rng.multinomial(m, np.full(m, 1.0 / m), size=reps)
    return float(np.mean(contains(S, counts @ atoms / math.sqrt(m))))


def product_measure_eval(kind: str, cylinder, sset: SampleSet, exact: bool = False,
                         reps: int = 200_000, seed: int = 0, convention: str = "keep_small"):
    """``Q(S)`` or ``Q_dagger(S)`` of the cylinder ``S_1 x ... x S_k`` (one Ball in R^d per sample).

    ``Q`` uses the centred atoms ``X - Xbar``; ``Qdagger`` the truncated and
    recentred atoms ``X_dagger``.
    """
    if kind not in ("Q", "Qdagger"):
        raise SampleError("kind must be 'Q' or 'Qdagger'")
    cylinder = list(cylinder)
    if len(cylinder) != sset.k:
        raise SampleError("one region per sample required")
    if any(S.q != sset.d for S in cylinder):
        raise SampleError("cylinder factors must live in R^d")
    if exact and max(sset.n_js) > EXACT_MAX_N:
        raise SampleError(f"exact mode limited to n_j <= {EXACT_MAX_N}")
    if kind == "Q":
        atoms = [X - X.mean(axis=0) for X in sset.samples]
    else:
        atoms = truncate_and_center(sset, convention).atoms
    return math.prod(_factor(A, S, exact, reps, seed, j) for j, (A, S) in enumerate(zip(atoms, cylinder)))
