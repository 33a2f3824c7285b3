"""Sample events E1-E5, the characteristic-function integral, Cramer probing and rate fits.

Every event works on a single sample (k = 1).  Indicators return plain
booleans; :func:`complement_probability` turns any of them into a Monte
Carlo estimate of ``1 - P(E)`` over simulated samples, and :func:`rate_fit`
summarises how that probability decays in n.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from bootedge._rng import derive, map_blocks
from bootedge.bootstrap import SampleError, SampleSet, truncate_and_center
from bootedge.edgeworth import ExpansionError, build_expansion, xi_nu
from bootedge.mc import Estimate, MCConfig, block_sums
from bootedge.smooth_model import approximate_cumulants
from bootedge.tensors import sample_cumulants


class DiagnosticError(ValueError):
    pass


class BelowResolution(DiagnosticError):
    """Every estimate on the grid is zero: the decay is below Monte Carlo resolution."""


R_EXPONENTS = ("e2", "reduced")


def minimal_m(d: int, u: float, nu: int, lam: float) -> int:
    """Smallest integer strictly above ``2d(u+1) + nu + 3 + lambda``."""
    return math.floor(2 * d * (u + 1) + nu + 3 + lam) + 1


@dataclass(frozen=True)
class EventConfig:
    C1: float = 10.0
    C2: float | None = None
    C3: float = 4.0
    u: float = 0.1
    C: float = 1.0
    m: int | None = None
    nu: int = 1
    lam: float = 1.0
    d: int = 1
    r_exponent: str = "e2"

    def __post_init__(self):
        for name in ("C1", "C3", "u", "C"):
            if not getattr(self, name) > 0:
                raise DiagnosticError(f"{name} must be positive")
        if self.C2 is not None and not self.C2 > 0:
            raise DiagnosticError("C2 must be positive")
        if not self.C3 > 1:
            raise DiagnosticError("C3 must exceed 1")
        if self.r_exponent not in R_EXPONENTS:
            raise DiagnosticError(f"r_exponent must be one of {R_EXPONENTS}")
        bound = 2 * self.d * (self.u + 1) + self.nu + 3 + self.lam
        if self.m is None:
            object.__setattr__(self, "m", minimal_m(self.d, self.u, self.nu, self.lam))
        elif not self.m > bound:
            raise DiagnosticError(f"m={self.m} must exceed 2d(u+1)+nu+3+lambda = {bound:g}")

    @property
    def r(self) -> int:
        """Moment exponent of E2: ``max(2nu+3, d+1)``, or ``max(2nu+1, d+1)`` in the reduced form."""
        lead = 2 * self.nu + 3 if self.r_exponent == "e2" else 2 * self.nu + 1
        return max(lead, self.d + 1)

    def c2_for(self, population) -> float:
        """C2, defaulting to ten times the population's r-th absolute central moment."""
        return self.C2 if self.C2 is not None else 10.0 * population.abs_moment(self.r)


def _single(sset: SampleSet) -> np.ndarray:
    if sset.k != 1:
        raise SampleError("event indicators take a single sample")
    return sset.samples[0]


def sample_xi(sset: SampleSet, nu: int, stat=None) -> float:
    """``xi_nu`` of the expansion built from the sample cumulants with ``V = Vhat``.

    With ``stat`` the expansion is built instead from the statistic's
    standardised approximate cumulants against ``I_q``.
    """
    X = _single(sset)
    if stat is None:
        cs = sample_cumulants(X, nu + 2)
        exp = build_expansion(cs, cs.covariance(), nu)
    else:
        data = X if stat.lift is None else stat.lift(X)
        ac = approximate_cumulants(stat, [sample_cumulants(data, nu + 2)], [len(X)], nu)
        exp = build_expansion(ac.standardized, np.eye(stat.q), nu)
    return xi_nu(exp)


def e1_indicator(sset: SampleSet, cfg: EventConfig, mu, stat=None) -> bool:
    """``xi_nu <= C1`` and ``||Xbar - mu|| <= 1/C1``."""
    if mu is None:
        raise DiagnosticError("E1 needs the population mean")
    X = _single(sset)
    if np.linalg.norm(X.mean(axis=0) - np.ravel(mu)) > 1.0 / cfg.C1:
        return False
    try:
        return sample_xi(sset, cfg.nu, stat) <= cfg.C1
    except ExpansionError:
        return False


def conditional_moment(sset: SampleSet, r: float) -> float:
    """``E(||X* - Xbar||^r | X)``, the exact average over the n atoms."""
    X = _single(sset)
    return float(np.mean(np.linalg.norm(X - X.mean(axis=0), axis=1) ** r))


def e2_indicator(sset: SampleSet, cfg: EventConfig, C2: float | None = None) -> bool:
    c2 = cfg.C2 if C2 is None else C2
    if c2 is None:
        raise DiagnosticError("C2 unresolved; pass it or use EventConfig.c2_for(population)")
    return conditional_moment(sset, cfg.r) <= c2


def _eig_ok(V, upper, lower):
    lam = np.linalg.eigvalsh(np.atleast_2d(V))
    return bool(lam.max() <= upper and lam.min() >= lower)


def e3_e4_indicator(sset: SampleSet, cfg: EventConfig, convention: str = "keep_small"):
    """``(E3, E4)``: eigenvalues of Vhat in ``[1/C3, C3]`` and of V_dagger in ``[1/2, 2]``."""
    X = _single(sset)
    if len(X) < X.shape[1] + 1:
        raise SampleError("need n >= d + 1")
    Xc = X - X.mean(axis=0)
    V = Xc.T @ Xc / len(X)
    e3 = _eig_ok(V, cfg.C3, 1.0 / cfg.C3)
    try:
        rep = truncate_and_center(sset, convention)
    except SampleError:
        return e3, False
    return e3, _eig_ok(rep.Vdagger[0], 2.0, 0.5)


# -- E5 -------------------------------------------------------------------------

def empirical_cf(atoms, t):
    """``chi*(t) = mean_i exp(i t'(X_i - Xbar))`` for an ``(N, d)`` batch of t."""
    atoms = np.asarray(atoms, dtype=float)
    Xc = atoms - atoms.mean(axis=0)
    t = np.atleast_2d(np.asarray(t, dtype=float))
    return np.exp(1j * (t @ Xc.T)).mean(axis=1)


def weight_normalizer(d: int, C: float) -> float:
    """``int exp(-C ||t||^{1/2}) dt`` over R^d."""
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return sphere * 2 * math.gamma(2 * d) / C ** (2 * d)


def _weight_sampler(d: int, C: float):
    """Draws from the density proportional to ``exp(-C ||t||^{1/2})``.

    ``||t||^{1/2}`` is Gamma(2d, 1/C) distributed, so the radius is drawn
    exactly and the direction uniformly.
    """

    def sample(rng, size):
        w = rng.gamma(2 * d, 1.0 / C, size=size)
        direction = rng.standard_normal((size, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return direction * (w * w)[:, None]

    return sample


def e5_threshold(n: int, cfg: EventConfig) -> float:
    return n ** (-cfg.d * (cfg.u + 1) - (cfg.nu + 3) / 2)


def e5_integral(sset: SampleSet, population_cf: Callable, cfg: EventConfig, mc: MCConfig):
    """Importance-sampling estimate of the E5 integral and the event indicator.

    Returns ``(Estimate, holds)`` where ``holds`` compares the point estimate
    with ``n^{-d(u+1)-(nu+3)/2}``.
    """
    if population_cf is None:
        raise DiagnosticError("E5 needs a closed-form population characteristic function")
    X = _single(sset)
    n, d = X.shape
    s = n ** (cfg.u - 0.5)
    Z = weight_normalizer(d, cfg.C)

    def fn(T):
        diff = empirical_cf(X, s * T) - population_cf(s * T)
        return np.abs(diff) ** cfg.m

    total, sq, count = block_sums(_weight_sampler(d, cfg.C), fn, mc, "e5")
    mean = total / count
    var = max(sq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    est = Estimate(Z * float(mean), Z * math.sqrt(var / count))
    return est, est.value <= e5_threshold(n, cfg)


def e5_quadrature(sset: SampleSet, population_cf: Callable, cfg: EventConfig,
                  panels: int = 2000, order: int = 10, angles: int = 64) -> float:
    """Deterministic cross-check of :func:`e5_integral` for d <= 2.

    Substitutes ``||t|| = w^2`` and applies composite Gauss-Legendre in ``w``
    on ``[0, 60/C]`` (plus a trapezoid rule in the angle when d = 2).
    """
    X = _single(sset)
    n, d = X.shape
    if d > 2:
        raise DiagnosticError("quadrature cross-check is limited to d <= 2")
    s = n ** (cfg.u - 0.5)
    x, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 60.0 / cfg.C, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    w = (mid[:, None] + half[:, None] * x).ravel()
    ww = (half[:, None] * wts).ravel()
    r = w * w
    # dt = d r r^{d-1} dtheta with dr = 2 w dw
    jac = 2 * w * r ** (d - 1) * np.exp(-cfg.C * w)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
        dtheta = np.ones(2)
    else:
        th = 2 * math.pi * np.arange(angles) / angles
        dirs = np.column_stack([np.cos(th), np.sin(th)])
        dtheta = np.full(angles, 2 * math.pi / angles)
    total = 0.0
    for u_dir, dth in zip(dirs, dtheta):
        T = s * r[:, None] * u_dir
        f = np.abs(empirical_cf(X, T) - population_cf(T)) ** cfg.m
        total += dth * float(np.sum(ww * jac * f))
    return total


# -- Cramer ---------------------------------------------------------------------

@dataclass(frozen=True)
class CramerProbe:
    sup_modulus: float
    t_min: float
    satisfied: bool


def cramer_probe(cf: Callable, d: int = 1, t_min: float = 5.0, t_max: float = 500.0,
                 points: int = 20_001, tol: float = 1e-3, seed: int = 0) -> CramerProbe:
    """Largest ``|cf(t)|`` over ``t_min <= ||t|| <= t_max``.

    The condition is reported as satisfied when that supremum stays below
    ``1 - tol``.  A finite grid can only flag violations, not prove the condition.
    """
    radii = np.linspace(t_min, t_max, points)
    if d == 1:
        T = np.concatenate([radii, -radii])[:, None]
    else:
        rng = derive(seed, "cramer")
        dirs = rng.standard_normal((points, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        T = np.vstack([dirs * radii[:, None]] + [e * radii[:, None] for e in np.eye(d)])
    sup = float(np.max(np.abs(cf(T))))
    return CramerProbe(sup, t_min, sup < 1 - tol)


# -- event rates ------------------------------------------------------------------

EVENTS = ("E1", "E2", "E3", "E4", "E5")


def event_holds(name: str, sset: SampleSet, population, cfg: EventConfig, mc: MCConfig | None = None) -> bool:
    if name == "E1":
        return e1_indicator(sset, cfg, population.mean)
    if name == "E2":
        return e2_indicator(sset, cfg, cfg.c2_for(population))
    if name == "E3":
        return e3_e4_indicator(sset, cfg)[0]
    if name == "E4":
        return e3_e4_indicator(sset, cfg)[1]
    if name == "E5":
        return e5_integral(sset, population.cf, cfg, mc or MCConfig(samples=20_000))[1]
    raise DiagnosticError(f"unknown event {name!r}; choose from {EVENTS}")


def complement_probability(events, population, n: int, replicates: int, seed: int,
                           cfg: EventConfig, mc: MCConfig | None = None, jobs: int = 1):
    """Estimate ``1 - P(E)`` for each named event from ``replicates`` simulated samples of size n.

    Replicate ``i`` uses the sample stream ``(seed, "events", n, i)``, so the
    estimates do not depend on ``jobs``.
    """
    events = list(events)

    def run(i):
        sset = SampleSet.simulate(population, [n], seed, stream=f"events/{n}/{i}")
        return [not event_holds(e, sset, population, cfg, mc) for e in events]

    flags = np.array(map_blocks(run, range(replicates), jobs), dtype=float)
    p = flags.mean(axis=0)
    se = np.sqrt(p * (1 - p) / replicates)
    return {e: Estimate(float(a), float(b)) for e, a, b in zip(events, p, se)}


# -- rate fitting -------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    n_grid: tuple
    estimates: tuple
    ses: tuple
    slope: float
    intercept: float
    slope_se: float
    ci: tuple
    floored: bool = False
    label: str = ""
    notes: dict = field(default_factory=dict)

    def rows(self):
        return [(n, e, s) for n, e, s in zip(self.n_grid, self.estimates, self.ses)]

    def write_csv(self, path, header_lines=()):
        path = Path(path)
        with path.open("w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# slope_ci={self.ci[0]!r},{self.ci[1]!r} floored={self.floored}\n")
            w = csv.writer(fh)
            w.writerow(["n", "estimate", "se"])
            for n, e, s in self.rows():
                w.writerow([n, repr(float(e)), repr(float(s))])
            w.writerow(["fit", repr(float(self.slope)), repr(float(self.slope_se))])


def fit_rates(n_grid, estimates, ses=None, floor=None, label="", level=0.95) -> RateFit:
    """Weighted least squares of ``log(estimate)`` on ``log(n)``.

    Weights are ``(estimate / se)^2`` when standard errors are given (delta
    method); zero estimates are raised to ``floor`` (default: half the smallest
    positive estimate).  All-zero input raises :class:`BelowResolution`.
    """
    n = np.asarray(n_grid, dtype=float)
    est = np.asarray(estimates, dtype=float)
    if len(n) < 3:
        raise DiagnosticError("rate fits need at least 3 grid points")
    if np.any(np.diff(n) <= 0):
        raise DiagnosticError("n grid must be strictly increasing")
    if np.any(est < 0):
        raise DiagnosticError("estimates must be non-negative")
    if np.all(est == 0):
        raise BelowResolution("all estimates are zero: decay below Monte Carlo resolution")
    floored = bool(np.any(est == 0))
    if floored:
        f = 0.5 * est[est > 0].min() if floor is None else float(floor)
        est_used = np.where(est == 0, f, est)
    else:
        est_used = est
    se = None if ses is None else np.asarray(ses, dtype=float)
    x = np.log(n)
    y = np.log(est_used)
    A = np.column_stack([np.ones_like(x), x])
    if se is not None and np.all(se > 0):
        wts = (est_used / se) ** 2
        known = True
    else:
        wts = np.ones_like(x)
        known = False
    Aw = A * np.sqrt(wts)[:, None]
    yw = y * np.sqrt(wts)
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    cov = np.linalg.inv(Aw.T @ Aw)
    if known:
        q = stats.norm.ppf(0.5 + level / 2)
    else:
        dof = len(x) - 2
        resid = yw - Aw @ coef
        sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = cov * sigma2
        q = stats.t.ppf(0.5 + level / 2, max(dof, 1))
    slope_se = float(math.sqrt(max(cov[1, 1], 0.0)))
    slope = float(coef[1])
    return RateFit(tuple(int(v) for v in n), tuple(float(v) for v in est),
                   tuple(float(v) for v in (se if se is not None else np.zeros_like(est))),
                   slope, float(coef[0]), slope_se, (slope - q * slope_se, slope + q * slope_se),
                   floored, label)


def rate_fit(estimator: Callable, n_grid, floor=None, label="") -> RateFit:
    """Evaluate ``estimator(n) -> Estimate`` (or ``(value, se)``) on the grid and fit the slope."""
    vals = [estimator(int(n)) for n in n_grid]
    est = [float(v[0]) for v in vals]
    ses = [float(v[1]) for v in vals]
    return fit_rates(n_grid, est, ses, floor=floor, label=label)


def strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def non_increasing(values) -> bool:
    v = list(values)
    return all(b <= a for a, b in zip(v, v[1:]))


def non_increasing_within(estimates, k: float = 2.0) -> bool:
    """``est[i+1] <= est[i] + k * sqrt(se_i^2 + se_{i+1}^2)`` for consecutive pairs."""
    out = True
    for (a, sa), (b, sb) in zip(estimates, estimates[1:]):
        out = out and b <= a + k * math.hypot(sa, sb)
    return out


__all__ = [
    "EventConfig", "RateFit", "CramerProbe", "minimal_m", "sample_xi", "e1_indicator",
    "conditional_moment", "e2_indicator", "e3_e4_indicator", "empirical_cf", "e5_integral",
    "e5_quadrature", "e5_threshold", "weight_normalizer", "cramer_probe", "complement_probability",
    "event_holds", "fit_rates", "rate_fit", "strictly_decreasing", "non_increasing", "non_increasing_within",
]
