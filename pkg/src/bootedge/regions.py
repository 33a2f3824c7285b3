"""Region class: closed balls in R^q plus half-lines (-inf, t] when q = 1.

Also hosts the Gaussian boundary-mass estimate, the eigenvalue selection
used in the induction step over d, and the Monte Carlo experiment for the
boundary-neighbourhood probability of a graded polynomial map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from bootedge.mc import Estimate, MCConfig, block_sums, gaussian_sampler
from bootedge.polynomial import MultiPolynomial

POSITIVITY_TOL = 1e-12


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    """Closed ball ``{x: ||x - center|| <= radius}``; ``radius=inf`` is all of R^q.

    In one dimension a half-line ``(-inf, t]`` is encoded with
    ``halfline_threshold=t`` and no radius.
    """

    q: int
    center: tuple = None
    radius: float | None = None
    halfline_threshold: float | None = None

    def __post_init__(self):
        if self.q < 1:
            raise RegionError("q must be positive")
        if self.halfline_threshold is not None:
            if self.q != 1:
                raise RegionError("half-lines exist only for q = 1")
            if self.radius is not None:
                raise RegionError("give either a radius or a half-line threshold, not both")
            object.__setattr__(self, "center", (0.0,))
            object.__setattr__(self, "halfline_threshold", float(self.halfline_threshold))
            return
        if self.radius is None:
            raise RegionError("radius required")
        if not self.radius > 0:
            raise RegionError("radius must be positive")
        center = (0.0,) * self.q if self.center is None else tuple(float(c) for c in np.ravel(self.center))
        if len(center) != self.q:
            raise RegionError("center has wrong dimension")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def halfline(cls, t):
        return cls(1, halfline_threshold=t)

    @classmethod
    def whole(cls, q):
        return cls(q, radius=math.inf)

    @classmethod
    def interval(cls, lo, hi):
        return cls(1, center=((lo + hi) / 2,), radius=(hi - lo) / 2)

    @property
    def is_halfline(self):
        return self.halfline_threshold is not None

    @property
    def is_whole(self):
        return not self.is_halfline and math.isinf(self.radius)

    def translate(self, y) -> "Ball":
        y = np.ravel(np.asarray(y, dtype=float))
        if self.is_halfline:
            return Ball.halfline(self.halfline_threshold + float(y[0]))
        return Ball(self.q, center=tuple(np.asarray(self.center) + y), radius=self.radius)

    def interval_bounds(self):
        """``(lo, hi)`` for q = 1 regions."""
        if self.q != 1:
            raise RegionError("interval bounds only defined for q = 1")
        if self.is_halfline:
            return -math.inf, self.halfline_threshold
        c = self.center[0]
        return c - self.radius, c + self.radius

    def label(self):
        if self.is_halfline:
            return f"(-inf,{self.halfline_threshold:.6g}]"
        if self.is_whole:
            return f"R^{self.q}"
        return f"B({','.join(f'{c:.6g}' for c in self.center)};{self.radius:.6g})"


def _points(B, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    if X.shape[1] != B.q:
        raise RegionError(f"point dimension {X.shape[1]} does not match q={B.q}")
    return X, single


def boundary_distance(B: Ball, x):
    """Euclidean distance from ``x`` to the boundary of ``B``."""
    X, single = _points(B, x)
    if B.is_halfline:
        dist = np.abs(X[:, 0] - B.halfline_threshold)
    elif B.is_whole:
        raise RegionError("R^q has no boundary")
    else:
        dist = np.abs(np.linalg.norm(X - np.asarray(B.center), axis=1) - B.radius)
    return float(dist[0]) if single else dist


def contains(B: Ball, x):
    """Closed-region membership; accepts a point or an ``(N, q)`` batch."""
    X, single = _points(B, x)
    if B.is_halfline:
        out = X[:, 0] <= B.halfline_threshold
    elif B.is_whole:
        out = np.ones(X.shape[0], dtype=bool)
    else:
        out = np.linalg.norm(X - np.asarray(B.center), axis=1) <= B.radius
    return bool(out[0]) if single else out


def in_boundary_neighborhood(B: Ball, x, eps: float):
    """True where the distance from ``x`` to the boundary of ``B`` is below ``eps``."""
    if not eps > 0:
        raise RegionError("eps must be positive")
    d = boundary_distance(B, x)
    return d < eps


def gaussian_boundary_mass(B: Ball, V, eps: float, mc: MCConfig) -> Estimate:
    """Monte Carlo mass of the eps-neighbourhood of the boundary of B under N(0, V)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape != (B.q, B.q):
        raise RegionError("covariance has wrong shape")
    if np.linalg.eigvalsh(V).min() <= POSITIVITY_TOL:
        raise RegionError("degenerate covariance")
    if B.is_whole:
        raise RegionError("R^q has no boundary")
    if eps == 0:
        return Estimate(0.0, 0.0)
    s, ss, count = block_sums(
        gaussian_sampler(V), lambda Z: in_boundary_neighborhood(B, Z, eps), mc, "boundary"
    )
    p = s / count
    return Estimate(float(p), float(math.sqrt(max(p * (1 - p), 0.0) / count)))


def lemma1_select(vs):
    """Index ``j`` maximising the smallest eigenvalue of ``W_j = W_0 - v_j v_j^T``.

    ``vs`` holds ``d`` vectors of length ``q`` as rows, with ``d > q`` and
    ``W_0 = sum_i v_i v_i^T`` positive definite.  Returns ``(j, lambda_min(W_j))``
    with a 0-based ``j``.
    """
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    d, q = vs.shape
    if d <= q:
        raise RegionError("need more vectors than dimensions (d > q)")
    W0 = vs.T @ vs
    if np.linalg.eigvalsh(W0).min() <= POSITIVITY_TOL:
        raise RegionError("W_0 is not positive definite")
    lams = np.array([np.linalg.eigvalsh(W0 - np.outer(v, v)).min() for v in vs])
    j = int(np.argmax(lams))
    return j, float(lams[j])


@dataclass(frozen=True)
class PolynomialMap:
    """q polynomials in d variables with grade-g parts weighted by n^{-g/2}.

    ``components[a][g]`` is the grade-g part of component ``a``.  The linear
    (grade 0) coefficients define ``W = C C^T``, whose eigenvalues must lie
    in ``[1/b2, b2]``; all coefficients are bounded by ``b1`` in absolute value.
    """

    components: tuple
    b1: float
    b2: float
    W: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        comps = tuple(tuple(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        d = comps[0][0].nvars
        for comp in comps:
            for g, p in enumerate(comp):
                if p.nvars != d:
                    raise RegionError("components must share the number of variables")
                if any(sum(e) != g + 1 for e, _ in p.items()):
                    raise RegionError(f"grade-{g} part must be homogeneous of degree {g + 1}")
                if p.max_abs_coefficient() > self.b1:
                    raise RegionError("coefficient bound b1 violated")
        C = self.linear_coefficients()
        W = C @ C.T
        lam = np.linalg.eigvalsh(W)
        if lam.min() < 1.0 / self.b2 or lam.max() > self.b2:
            raise RegionError("eigenvalues of W outside [1/b2, b2]")
        object.__setattr__(self, "W", W)

    @property
    def q(self):
        return len(self.components)

    @property
    def d(self):
        return self.components[0][0].nvars

    def linear_coefficients(self):
        d = self.components[0][0].nvars
        C = np.zeros((len(self.components), d))
        for a, comp in enumerate(self.components):
            for i in range(d):
                e = [0] * d
                e[i] = 1
                C[a, i] = comp[0].coefficient(e)
        return C

    def at(self, n):
        """The q ungraded polynomials for sample size ``n``."""
        h = n ** -0.5
        return [sum((p.scale(h**g) for g, p in enumerate(comp)), MultiPolynomial.zero(self.d))
                for comp in self.components]

    def __call__(self, Z, n):
        return np.column_stack([p(Z) for p in self.at(n)])


def prop1_probability(pmap: PolynomialMap, Bs, beta: float, b: float, n: int, mc: MCConfig):
    """Estimate ``P{||Z|| <= b log n and pmap(Z) in (dB)^{n^-beta}}`` for each B.

    ``Z ~ N(0, I_d)``.  Returns ``(estimates, sup_estimate)``; all regions
    share the same draws, so the supremum is taken over correlated estimates.
    """
    if not 1 <= pmap.q <= pmap.d:
        raise RegionError("need 1 <= q <= d")
    if not beta > 0:
        raise RegionError("beta must be positive")
    Bs = list(Bs)
    for B in Bs:
        if B.q != pmap.q:
            raise RegionError("region dimension must equal q")
    eps = n ** (-beta)
    radius = b * math.log(n)
    polys = pmap.at(n)

    def fn(Z):
        inside = np.linalg.norm(Z, axis=1) <= radius
        P = np.column_stack([p(Z) for p in polys])
        cols = [inside & (boundary_distance(B, P) < eps) for B in Bs]
        return np.column_stack(cols)

    def sampler(rng, size):
        return rng.standard_normal((size, pmap.d))

    s, ss, count = block_sums(sampler, fn, mc, "prop1")
    p = s / count
    se = np.sqrt(np.maximum(p * (1 - p), 0.0) / count)
    ests = [Estimate(float(a), float(e)) for a, e in zip(p, se)]
    k = int(np.argmax(p))
    return ests, ests[k]
