"""Smooth functions of k sample means.

A :class:`SmoothStatistic` maps resampled means ``x_1..x_k`` (each a
d-vector) and the anchors ``a_1..a_k`` (original sample means) to a
q-vector.  Variables are addressed by a flat index ``j*d + i`` (sample j,
coordinate i) throughout.

The Taylor polynomial of ``n^{1/2} A(a + n^{-1/2} x)`` is kept in graded
form: the grade-g part is homogeneous of degree g+1 and carries the factor
``n^{-g/2}``.  Its cumulants, with the exact cumulants of the resampled
means as input, are computed as truncated power series in ``h = n^{-1/2}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np

from bootedge.edgeworth import GradedCumulants
from bootedge.polynomial import MultiPolynomial
from bootedge.regions import Ball, contains
from bootedge.tensors import mobius_weight, multisets, set_partitions

EIG_FLOOR = 1e-10
BALANCE_LIMIT = 100.0


class StatisticError(ValueError):
    pass


class DegenerateStatistic(StatisticError):
    pass


@dataclass(frozen=True)
class SmoothStatistic:
    """Statistic ``A(x_1..x_k; a_1..a_k)`` with values in R^q.

    ``value(means, anchors)`` takes a list of k arrays of shape ``(..., d)``
    and a list of k anchor d-vectors and returns shape ``(..., q)``.
    ``derivative(index, anchors)`` returns the q-vector of partial
    derivatives with respect to the flat variables in ``index``, evaluated
    at ``x = a``.  ``lift`` maps raw observations to the d-vectors whose
    means enter the statistic (identity when ``None``).
    """

    name: str
    k: int
    d: int
    q: int
    value: Callable
    derivative: Callable | None = None
    centered: bool = True
    lift: Callable | None = None
    max_order: int = 5

    @property
    def nvars(self):
        return self.k * self.d

    def split(self, x):
        """Flat ``(..., k*d)`` array to a list of k ``(..., d)`` arrays."""
        x = np.asarray(x, dtype=float)
        return [x[..., j * self.d:(j + 1) * self.d] for j in range(self.k)]

    def __call__(self, means, anchors):
        return np.asarray(self.value(means, anchors), dtype=float)

    def check_centering(self, anchors, atol=1e-12):
        if self.centered:
            v = self([np.asarray(a, dtype=float) for a in anchors], anchors)
            if np.max(np.abs(v)) > atol:
                raise StatisticError(f"{self.name}: value at the anchors is {v}, expected 0")


def finite_difference(stat: SmoothStatistic, order_steps=None):
    """Derivative callback from central differences of ``stat.value``.

    Each mixed partial uses the tensor-product central stencil, combined
    with one Richardson step (h, h/2).  Accuracy degrades quickly with the
    order: roughly 1e-8 relative at order 1-2 and 1e-4 at order 4 for
    well-scaled statistics.  Intended for experimentation only.
    """
    eps = np.finfo(float).eps

    def stencil(index, anchors, h):
        flat0 = np.concatenate([np.asarray(a, dtype=float) for a in anchors])
        total = np.zeros(stat.q)
        for signs in product((1.0, -1.0), repeat=len(index)):
            x = flat0.copy()
            for s, i in zip(signs, index):
                x[i] += s * h
            total += np.prod(signs) * stat(stat.split(x), anchors)
        return total / (2 * h) ** len(index)

    def derivative(index, anchors):
        s = len(index)
        scale = 1.0 + float(np.linalg.norm(np.concatenate([np.ravel(a) for a in anchors])))
        base = 1e-5 if s <= 2 else eps ** (1.0 / (s + 2))
        h = base * scale
        if order_steps and s in order_steps:
            h = order_steps[s] * scale
        d1 = stencil(index, anchors, h)
        d2 = stencil(index, anchors, h / 2)
        return (4 * d2 - d1) / 3

    return derivative


def _derivative_fn(stat):
    return stat.derivative if stat.derivative is not None else finite_difference(stat)


def _sorted_index(exps):
    return tuple(i for i, e in enumerate(exps) for _ in range(e))


@dataclass(frozen=True)
class RemainderBound:
    constant: float
    exponent: float
    log_power: int


@dataclass(frozen=True)
class StatisticExpansion:
    """Graded Taylor polynomial ``A_1``: ``grades[a][g]`` has degree g+1."""

    grades: tuple = field(repr=False)
    nu: int
    nvars: int
    remainder_bound: RemainderBound | None = None

    @property
    def q(self):
        return len(self.grades)

    def at(self, n):
        """Ungraded polynomials for sample size ``n`` (grade g scaled by n^{-g/2})."""
        h = n ** -0.5
        return [sum((p.scale(h**g) for g, p in enumerate(comp)), MultiPolynomial.zero(self.nvars))
                for comp in self.grades]

    def __call__(self, x, n):
        x = np.asarray(x, dtype=float)
        X = x.reshape(1, -1) if x.ndim <= 1 else x
        out = np.column_stack([p(X) for p in self.at(n)])
        return out[0] if x.ndim <= 1 else out


def taylor_expand(stat: SmoothStatistic, anchors, n: int, nu: int, max_grade=None) -> StatisticExpansion:
    """Taylor polynomial of ``n^{1/2} A(a + n^{-1/2} x)`` up to degree ``nu + 2``.

    The degree-s part carries ``n^{-(s-1)/2}`` and the coefficient of ``x^beta``
    is ``D^beta A(a) / beta!``.
    """
    if n < 1:
        raise StatisticError("n must be positive")
    top = nu + 2 if max_grade is None else max_grade + 1
    if top > stat.max_order:
        raise StatisticError(f"{stat.name}: derivatives up to order {top} unavailable")
    anchors = [np.asarray(a, dtype=float) for a in anchors]
    deriv = _derivative_fn(stat)
    D = stat.nvars
    grades = [[] for _ in range(stat.q)]
    for s in range(1, top + 1):
        terms = [dict() for _ in range(stat.q)]
        for idx in multisets(D, s):
            g = np.asarray(deriv(idx, anchors), dtype=float).reshape(stat.q)
            exps = [0] * D
            for i in idx:
                exps[i] += 1
            denom = math.prod(math.factorial(e) for e in exps)
            for a in range(stat.q):
                if g[a] != 0.0:
                    terms[a][tuple(exps)] = g[a] / denom
        for a in range(stat.q):
            grades[a].append(MultiPolynomial(D, terms[a]))
    return StatisticExpansion(tuple(tuple(c) for c in grades), nu, D)


def remainder_constant(stat: SmoothStatistic, anchors, n: int, nu: int, points: int = 41) -> float:
    """Smallest C with ``|n^{1/2} A(a + x/sqrt n) - A_1(x)| <= C n^{-(nu+2)/2} (log n)^{nu+3}``
    over a grid on ``||x|| <= log n`` (sup-norm over components).  Grid points
    where the statistic is not finite are skipped.
    """
    exp = taylor_expand(stat, anchors, n, nu)
    L = math.log(n)
    D = stat.nvars
    axes = [np.linspace(-L, L, points)] * D if D <= 2 else None
    if axes is not None:
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, D)
    else:
        rng = np.random.default_rng(0)
        grid = rng.uniform(-L, L, size=(points**2, D))
    grid = grid[np.linalg.norm(grid, axis=1) <= L]
    flat_a = np.concatenate(anchors)
    with np.errstate(all="ignore"):
        exact = math.sqrt(n) * stat(stat.split(flat_a + grid / math.sqrt(n)), anchors)
    # points where the statistic is undefined are outside its domain
    ok = np.all(np.isfinite(exact), axis=1)
    err = np.max(np.abs(exact[ok] - exp(grid[ok], n)))
    return float(err / (n ** (-(nu + 2) / 2) * L ** (nu + 3)))


def region_membership(stat: SmoothStatistic, anchors, B: Ball, n: int, x):
    """Is ``x`` (flat k*d vector, or a batch) in the preimage region R(B)?"""
    anchors = [np.asarray(a, dtype=float) for a in anchors]
    flat_a = np.concatenate(anchors)
    x = np.asarray(x, dtype=float)
    vals = math.sqrt(n) * stat(stat.split(flat_a + x / math.sqrt(n)), anchors)
    return contains(B, vals)


def _block_apply(blocks, x, k, d):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(k):
        out[..., j * d:(j + 1) * d] = x[..., j * d:(j + 1) * d] @ np.asarray(blocks[j]).T
    return out


def sym_power(V, p):
    w, U = np.linalg.eigh(np.asarray(V, dtype=float))
    if w.min() <= EIG_FLOOR:
        raise DegenerateStatistic("matrix is singular")
    return (U * w**p) @ U.T


def region_dagger_membership(stat, anchors, B: Ball, n: int, x, Vhat, Ymeans):
    """Membership in the transformed region R^dagger(B).

    R^dagger(B) is the image of R(B) under ``x_j -> V_j^{-1/2} x_j - n^{1/2} E(Y_j)``,
    so ``y`` belongs to it when ``V_j^{1/2} (y_j + n^{1/2} E(Y_j))`` lies in R(B).
    """
    k, d = stat.k, stat.d
    roots = [sym_power(Vj, 0.5) for Vj in Vhat]
    shift = math.sqrt(n) * np.concatenate([np.asarray(m, dtype=float) for m in Ymeans])
    x = np.asarray(x, dtype=float)
    pre = _block_apply(roots, x + shift, k, d)
    return region_membership(stat, anchors, B, n, pre)


def region_dagger_image(x, Vhat, Ymeans, n, k, d):
    """Forward map ``x_j -> V_j^{-1/2} x_j - n^{1/2} E(Y_j)``."""
    inv_roots = [sym_power(Vj, -0.5) for Vj in Vhat]
    shift = math.sqrt(n) * np.concatenate([np.asarray(m, dtype=float) for m in Ymeans])
    return _block_apply(inv_roots, x, k, d) - shift


# -- approximate cumulants ----------------------------------------------------

@dataclass(frozen=True)
class ApproximateCumulants:
    """Cumulant corrections of ``n^{1/2} A(Xbar* ...)`` to relative order ``n^{-nu/2}``.

    ``raw`` is in the scale of the statistic with leading covariance ``W``;
    ``standardized`` is the same after applying ``W^{-1/2}``, so its leading
    covariance is the identity.
    """

    q: int
    nu: int
    W: np.ndarray = field(repr=False)
    raw: GradedCumulants = field(repr=False)
    standardized: GradedCumulants = field(repr=False)
    root: np.ndarray = field(repr=False)
    inv_root: np.ndarray = field(repr=False)

    def mean(self, n):
        """Approximate mean ``sum_j n^{-j/2} k_{1,j}``."""
        out = np.zeros(self.q)
        for (r, j), T in self.raw.terms.items():
            if r == 1:
                out += n ** (-j / 2) * T
        return out

    def covariance(self, n):
        out = self.W.copy()
        for (r, j), T in self.raw.terms.items():
            if r == 2:
                out = out + n ** (-j / 2) * T
        return out

    def cumulant(self, r, n):
        if r == 1:
            return self.mean(n)
        if r == 2:
            return self.covariance(n)
        out = np.zeros((self.q,) * r)
        for (rr, j), T in self.raw.terms.items():
            if rr == r:
                out = out + n ** (-j / 2) * T
        return out


def _series_mul(a, b, top):
    return np.convolve(a, b)[: top + 1]


def mean_cumulants(sample_cumulants, n_js, nu):
    """Graded cumulants of ``x = n^{1/2} (Xbar* - Xbar)`` stacked over samples.

    Returns ``{r: dense (D,)*r tensor}`` for r = 2..nu+2; order r carries ``h^{r-2}``.
    """
    k = len(sample_cumulants)
    d = sample_cumulants[0].d
    n = sum(n_js)
    D = k * d
    out = {}
    for r in range(2, nu + 3):
        T = np.zeros((D,) * r)
        for j, cs in enumerate(sample_cumulants):
            rho = n / n_js[j]
            block = cs.tensor(r) * rho ** (r - 1)
            sl = tuple(slice(j * d, (j + 1) * d) for _ in range(r))
            T[sl] = block
        out[r] = T
    return out


def approximate_cumulants(stat: SmoothStatistic, sample_cumulants, n_js, nu: int,
                          balance_limit: float = BALANCE_LIMIT) -> ApproximateCumulants:
    """Cumulants of the Taylor polynomial ``A_1`` under resampling.

    ``sample_cumulants[j]`` holds the empirical cumulants of sample j up to
    order ``nu + 2`` (order 1 = sample mean, used as the anchor).  The
    resampled-mean cumulants are exact; the only truncation is in powers of
    ``n^{-1/2}`` beyond ``nu``.
    """
    if len(sample_cumulants) != stat.k or len(n_js) != stat.k:
        raise StatisticError("need one cumulant set and one sample size per sample")
    if any(cs.max_order < nu + 2 for cs in sample_cumulants):
        raise StatisticError(f"sample cumulants up to order {nu + 2} required")
    if any(cs.d != stat.d for cs in sample_cumulants):
        raise StatisticError("cumulant dimension does not match statistic")
    if min(n_js) < 1:
        raise StatisticError("sample sizes must be positive")
    if max(n_js) / min(n_js) > balance_limit:
        raise StatisticError(f"sample sizes {n_js} violate the balance limit {balance_limit}")
    anchors = [cs.mean() for cs in sample_cumulants]
    n = sum(n_js)
    D = stat.nvars
    top = nu
    expansion = taylor_expand(stat, anchors, n, nu)
    xcum = mean_cumulants(sample_cumulants, n_js, nu)

    @lru_cache(maxsize=None)
    def x_moment(idx):
        """E[x^idx] as an h-series; ``idx`` is a sorted tuple of flat variables."""
        series = np.zeros(top + 1)
        for part in set_partitions(len(idx)):
            power = 0
            val = 1.0
            for block in part:
                b = len(block)
                if b == 1:
                    val = 0.0
                    break
                power += b - 2
                if power > top:
                    val = 0.0
                    break
                val *= xcum[b][tuple(idx[p] for p in block)]
                if val == 0.0:
                    break
            if val != 0.0:
                series[power] += val
        return series

    grades = expansion.grades
    q = stat.q

    @lru_cache(maxsize=None)
    def s_moment(alpha):
        """E[S_{alpha_1} ... S_{alpha_r}] as an h-series."""
        series = np.zeros(top + 1)
        r = len(alpha)
        for gs in product(range(top + 1), repeat=r):
            shift = sum(gs)
            if shift > top:
                continue
            poly = MultiPolynomial.constant(D, 1.0)
            for a, g in zip(alpha, gs):
                poly = poly * grades[a][g]
                if poly.is_zero():
                    break
            for exps, c in poly.items():
                m = x_moment(_sorted_index(exps))
                series[shift:] += c * m[: top + 1 - shift]
        return series

    raw_terms = {}
    W = None
    for r in range(1, nu + 3):
        parts = set_partitions(r)
        dense = np.zeros((top + 1,) + (q,) * r)
        for alpha in multisets(q, r):
            acc = np.zeros(top + 1)
            for part in parts:
                prod_series = np.zeros(top + 1)
                prod_series[0] = mobius_weight(len(part))
                for block in part:
                    sub = tuple(sorted(alpha[p] for p in block))
                    prod_series = _series_mul(prod_series, s_moment(sub), top)
                acc += prod_series
            for perm in set(_perms(alpha)):
                dense[(slice(None),) + perm] = acc
        for j in range(top + 1):
            if r == 2 and j == 0:
                W = dense[0]
                continue
            # grades below r-2 (and the mean at grade 0) vanish identically
            if j < max(r - 2, 1) or (j - r) % 2:
                continue
            if np.any(dense[j] != 0.0):
                raw_terms[(r, j)] = dense[j].copy()
    W = 0.5 * (W + W.T)
    lam = np.linalg.eigvalsh(W)
    if lam.min() <= EIG_FLOOR:
        raise DegenerateStatistic(f"leading covariance is singular (eigenvalues {lam})")
    root = sym_power(W, 0.5)
    inv_root = sym_power(W, -0.5)
    raw = GradedCumulants(q, raw_terms)
    return ApproximateCumulants(q, nu, W, raw, raw.transformed(inv_root), root, inv_root)


def _perms(t):
    from itertools import permutations

    return permutations(t)


def cumulants_for_samples(stat: SmoothStatistic, samples, nu: int) -> ApproximateCumulants:
    """Convenience: empirical cumulants of each sample, then :func:`approximate_cumulants`."""
    from bootedge.tensors import sample_cumulants

    samples = [np.asarray(s, dtype=float).reshape(len(s), -1) for s in samples]
    cs = [sample_cumulants(s, nu + 2) for s in samples]
    return approximate_cumulants(stat, cs, [len(s) for s in samples], nu)

