"""Simulation populations and built-in smooth statistics.

Populations are centred where that is natural (``exp`` is Exp(1) - 1) and
expose their characteristic function, which the E5 diagnostic needs.  The
``lattice`` population (Rademacher coordinates) violates Cramer's condition
and serves as a negative control.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp

from bootedge.smooth_model import SmoothStatistic, StatisticError, sym_power


class CatalogError(KeyError):
    pass


@dataclass(frozen=True)
class Population:
    name: str
    d: int
    sampler: Callable = field(repr=False)
    mean: np.ndarray = field(repr=False)
    cf: Callable = field(repr=False)
    cramer: bool = True
    params: dict = field(default_factory=dict)

    def sample(self, rng, n):
        return self.sampler(rng, n)

    def central_moments(self):
        """Per-coordinate central moments ``(m1, m2, m3, m4)``; coordinates are iid."""
        if self.name == "normal":
            return (0.0, 1.0, 0.0, 3.0)
        if self.name == "exp":
            return (0.0, 1.0, 2.0, 9.0)
        if self.name == "chisq":
            df = self.params["df"]
            return (0.0, 1.0, math.sqrt(8.0 / df), 3.0 + 12.0 / df)
        if self.name == "lattice":
            return (0.0, 1.0, 0.0, 1.0)
        sd2 = self.params["sd"] ** 2
        return (0.0, 1.0 + sd2, 0.0, 1.0 + 6 * sd2 + 3 * sd2 * sd2)

    def abs_moment(self, r: float, draws: int = 400_000, seed: int = 20240601) -> float:
        """``E ||X - mu||^r``; closed form for the normal, fixed-seed Monte Carlo otherwise."""
        return _abs_moment(self.name, self.d, tuple(sorted(self.params.items())), float(r), draws, seed)


@lru_cache(maxsize=None)
def _abs_moment(name, d, params, r, draws, seed):
    pop = population(name, d, **dict(params))
    if name == "normal" and d == 1:
        return 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)
    if name == "lattice":
        return float(d ** (r / 2))
    X = pop.sample(np.random.default_rng(seed), draws) - pop.mean
    return float(np.mean(np.linalg.norm(X, axis=1) ** r))


def _product_cf(cf1):
    def cf(t):
        t = np.atleast_2d(np.asarray(t, dtype=float))
        out = np.ones(t.shape[0], dtype=complex)
        for i in range(t.shape[1]):
            out = out * cf1(t[:, i])
        return out

    return cf


def population(name: str, d: int = 1, **params) -> Population:
    """Look up a population by name; unknown names raise :class:`CatalogError`."""
    if name == "normal":
        return Population(name, d, lambda rng, n: rng.standard_normal((n, d)), np.zeros(d),
                          _product_cf(lambda t: np.exp(-0.5 * t * t)), True, params)
    if name == "exp":
        return Population(name, d, lambda rng, n: rng.standard_exponential((n, d)) - 1.0, np.zeros(d),
                          _product_cf(lambda t: np.exp(-1j * t) / (1 - 1j * t)), True, params)
    if name == "chisq":
        df = float(params.get("df", 4))
        s = math.sqrt(2 * df)
        return Population(
            name, d, lambda rng, n: (rng.chisquare(df, (n, d)) - df) / s, np.zeros(d),
            _product_cf(lambda t: np.exp(-1j * t * df / s) * (1 - 2j * t / s) ** (-df / 2)), True,
            {"df": df},
        )
    if name == "lattice":
        return Population(name, d, lambda rng, n: rng.choice([-1.0, 1.0], size=(n, d)), np.zeros(d),
                          _product_cf(lambda t: np.cos(t) + 0j), False, params)
    if name == "normal_mixture":
        sd = float(params.get("sd", 0.5))

        def sampler(rng, n):
            signs = rng.choice([-1.0, 1.0], size=(n, d))
            return signs + sd * rng.standard_normal((n, d))

        return Population(name, d, sampler, np.zeros(d),
                          _product_cf(lambda t: np.cos(t) * np.exp(-0.5 * sd * sd * t * t) + 0j), True,
                          {"sd": sd})
    raise CatalogError(f"unknown population {name!r}; choose from {sorted(POPULATIONS)}")


POPULATIONS = ("normal", "exp", "chisq", "lattice", "normal_mixture")


# -- statistics -----------------------------------------------------------------

def _linear_derivative(M):
    """Derivative callback of ``x -> M x`` over the flat variables."""
    M = np.atleast_2d(np.asarray(M, dtype=float))

    def derivative(index, anchors):
        if len(index) == 1:
            return M[:, index[0]].copy()
        return np.zeros(M.shape[0])

    return derivative


def centered_mean(d: int = 1, scale=None) -> SmoothStatistic:
    """``S (x - a)`` for one sample; ``S`` defaults to the identity."""
    S = np.eye(d) if scale is None else np.atleast_2d(np.asarray(scale, dtype=float))

    def value(means, anchors):
        return (np.asarray(means[0]) - anchors[0]) @ S.T

    name = "centered_mean" if scale is None else "standardized_mean"
    return SmoothStatistic(name, 1, d, S.shape[0], value, _linear_derivative(S))


def mean_difference(d: int = 1) -> SmoothStatistic:
    """``(x_1 - a_1) - (x_2 - a_2)``."""
    M = np.hstack([np.eye(d), -np.eye(d)])

    def value(means, anchors):
        return (np.asarray(means[0]) - anchors[0]) - (np.asarray(means[1]) - anchors[1])

    return SmoothStatistic("mean_difference", 2, d, d, value, _linear_derivative(M))


def _square_lift(X):
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    return np.hstack([X, X * X])


def variance() -> SmoothStatistic:
    """Plug-in variance ``m2 - m1^2`` minus its value at the anchors (lifted data (X, X^2))."""

    def value(means, anchors):
        m = np.asarray(means[0])
        a = anchors[0]
        return ((m[..., 1] - m[..., 0] ** 2) - (a[1] - a[0] ** 2))[..., None]

    def derivative(index, anchors):
        a = anchors[0]
        idx = tuple(sorted(index))
        if idx == (0,):
            return np.array([-2 * a[0]])
        if idx == (1,):
            return np.array([1.0])
        if idx == (0, 0):
            return np.array([-2.0])
        return np.array([0.0])

    return SmoothStatistic("variance", 1, 2, 1, value, derivative, lift=_square_lift)


@lru_cache(maxsize=None)
def _t_derivative(p: int, r: int):
    """Lambdified ``d^{p+r} / du^p dv^r`` of ``(u - c) / sqrt(v - u^2)``."""
    u, v, c = sp.symbols("u v c", real=True)
    f = (u - c) / sp.sqrt(v - u**2)
    return sp.lambdify((u, v, c), sp.diff(f, u, p, v, r) if p + r else f, "math")


def studentized(d0: int = 1) -> SmoothStatistic:
    """Componentwise t-ratio ``(m_c - a_c) / sqrt(s_c - m_c^2)``.

    Works on lifted observations ``(X, X^2)`` so that d = 2 d0 and q = d0.
    """
    d = 2 * d0

    def value(means, anchors):
        m = np.asarray(means[0])
        a = anchors[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return (m[..., :d0] - a[:d0]) / np.sqrt(m[..., d0:] - m[..., :d0] ** 2)

    def derivative(index, anchors):
        a = anchors[0]
        out = np.zeros(d0)
        for c in range(d0):
            if all(i in (c, d0 + c) for i in index):
                p = sum(1 for i in index if i == c)
                r = len(index) - p
                out[c] = _t_derivative(p, r)(a[c], a[d0 + c], a[c])
        return out

    return SmoothStatistic("studentized", 1, d, d0, value, derivative, lift=_square_lift)


STATISTICS = ("centered_mean", "standardized_mean", "mean_difference", "studentized", "variance")


def statistic(name: str, d: int = 1, samples=None) -> SmoothStatistic:
    """Catalog lookup.  ``d`` is the raw observation dimension.

    ``standardized_mean`` needs ``samples`` (raw, already lifted) to fix the
    scale ``Vhat^{-1/2}`` of the first sample.
    """
    if name == "centered_mean":
        return centered_mean(d)
    if name == "standardized_mean":
        if samples is None:
            raise StatisticError("standardized_mean needs the sample to fix its scale")
        X = np.asarray(samples[0], dtype=float).reshape(len(samples[0]), -1)
        Xc = X - X.mean(axis=0)
        return centered_mean(X.shape[1], sym_power(Xc.T @ Xc / len(X), -0.5))
    if name == "mean_difference":
        return mean_difference(d)
    if name == "studentized":
        return studentized(d)
    if name == "variance":
        if d != 1:
            raise StatisticError("variance statistic is univariate")
        return variance()
    raise CatalogError(f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}")


def lifted_law(population: Population, stat: SmoothStatistic, ratios=None):
    """Exact mean and covariance of the flat resampling variables of ``stat``.

    Returns ``(anchors, Sigma)`` where ``anchors`` lists the k lifted
    population means and ``Sigma`` is the covariance of
    ``x = n^{1/2}(Xbar - mu)`` stacked over samples, i.e. sample j's block is
    scaled by ``n / n_j`` (``ratios`` gives n_j up to a common factor).
    """
    m1, m2, m3, m4 = population.central_moments()
    d0 = population.d
    if stat.lift is None:
        mean = np.asarray(population.mean, dtype=float)
        cov = m2 * np.eye(d0)
    else:
        mean = np.concatenate([population.mean, np.full(d0, m2)])
        cov = np.zeros((2 * d0, 2 * d0))
        for c in range(d0):
            cov[c, c] = m2
            cov[c, d0 + c] = cov[d0 + c, c] = m3
            cov[d0 + c, d0 + c] = m4 - m2 * m2
    if mean.shape[0] != stat.d:
        raise StatisticError(f"population dimension does not fit statistic {stat.name}")
    ratios = [1.0] * stat.k if ratios is None else [float(r) for r in ratios]
    total = sum(ratios)
    D = stat.nvars
    Sigma = np.zeros((D, D))
    for j, rj in enumerate(ratios):
        sl = slice(j * stat.d, (j + 1) * stat.d)
        Sigma[sl, sl] = cov * total / rj
    return [mean.copy() for _ in range(stat.k)], Sigma


def lift(stat: SmoothStatistic, X):
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    return X if stat.lift is None else stat.lift(X)
