"""Edgeworth expansion polynomials, density terms and signed measures.

Convention: ``(-d)^alpha phi_{0,V} = H_alpha phi_{0,V}`` is the Fourier
inverse of ``(it)^alpha exp(-t'Vt/2)``.  The j-th term ``P_j`` is obtained by
expanding ``exp(sum_{j>=1} u^j chi_j(it))`` in powers of ``u`` and replacing
each monomial ``(it)^alpha`` by ``H_alpha``.  In one dimension with unit
variance this gives ``P_1(x) = kappa_3 (x^3 - 3x) / 6``, the classical
first-order term, so a positively skewed law puts more than half its mass
below its mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from bootedge.mc import Estimate, MCConfig, block_sums, gaussian_sampler
from bootedge.polynomial import MultiPolynomial, tensor_form
from bootedge.regions import Ball, RegionError, contains
from bootedge.tensors import CumulantSet

MAX_NU = 2
SPD_TOL = 1e-10


class ExpansionError(ValueError):
    pass


def check_spd(V) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] != V.shape[1]:
        raise ExpansionError("covariance must be square")
    if not np.allclose(V, V.T, atol=1e-12):
        raise ExpansionError("covariance must be symmetric")
    if np.linalg.eigvalsh(V).min() <= SPD_TOL:
        raise ExpansionError("covariance is not positive definite")
    return V


class HermiteTensorTable:
    """Lazily built table of the polynomials ``H_alpha`` for a fixed covariance."""

    def __init__(self, V):
        self.V = check_spd(V)
        self.q = self.V.shape[0]
        self.V_inverse = np.linalg.inv(self.V)
        self._forms = [MultiPolynomial.linear(self.V_inverse[i]) for i in range(self.q)]
        self.table = {(0,) * self.q: MultiPolynomial.constant(self.q, 1.0)}

    def __getitem__(self, alpha) -> MultiPolynomial:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.q:
            raise ExpansionError("multi-index has wrong length")
        if alpha not in self.table:
            i = next(k for k, a in enumerate(alpha) if a)
            prev = list(alpha)
            prev[i] -= 1
            H = self[tuple(prev)]
            self.table[alpha] = self._forms[i] * H - H.derivative(i)
        return self.table[alpha]

    def recursion_residual(self, alpha, i) -> float:
        """Largest coefficient of ``H_{alpha+e_i} - ((V^-1 x)_i H_alpha - d_i H_alpha)``."""
        up = list(alpha)
        up[i] += 1
        H = self[alpha]
        diff = self[tuple(up)] - (self._forms[i] * H - H.derivative(i))
        return diff.max_abs_coefficient()


def hermite_tensor(alpha, V) -> MultiPolynomial:
    return HermiteTensorTable(V)[alpha]


@dataclass(frozen=True)
class GradedCumulants:
    """Cumulant corrections ``k[(r, j)]``: the order-r cumulant carries ``n^{-j/2} k[(r, j)]``.

    The leading covariance ``(2, 0)`` is held separately by the expansion and
    is not part of this map.  Tensors are dense arrays of shape ``(q,)*r``.
    """

    q: int
    terms: dict = field(repr=False)

    def get(self, r, j):
        return self.terms.get((r, j))

    def max_grade(self):
        return max((j for (_, j) in self.terms), default=0)

    @classmethod
    def from_cumulant_set(cls, cs: CumulantSet, nu: int) -> "GradedCumulants":
        """Sum-of-iid scaling: the order-r cumulant enters at grade r - 2 (r >= 3).

        Orders 1 and 2 are taken to be the zero mean and the leading
        covariance, so they contribute no corrections.
        """
        if cs.max_order < nu + 2:
            raise ExpansionError(f"cumulants up to order {nu + 2} required, have {cs.max_order}")
        return cls(cs.d, {(r, r - 2): cs.tensor(r) for r in range(3, nu + 3)})

    def transformed(self, M) -> "GradedCumulants":
        from bootedge.tensors import contract

        M = np.atleast_2d(np.asarray(M, dtype=float))
        return GradedCumulants(M.shape[0], {k: contract(T, M) for k, T in self.terms.items()})


@dataclass(frozen=True)
class EdgeworthExpansion:
    q: int
    V: np.ndarray = field(repr=False)
    terms: tuple = field(repr=False)
    nu: int = 0
    symbols: tuple = field(repr=False, default=())

    def __post_init__(self):
        if len(self.terms) != self.nu + 1:
            raise ExpansionError("need one polynomial per order 0..nu")
        if self.terms[0] != MultiPolynomial.constant(self.q, 1.0):
            raise ExpansionError("P_0 must be identically 1")
        for j, P in enumerate(self.terms):
            if P.degree() > 3 * j:
                raise ExpansionError(f"P_{j} has degree {P.degree()} > {3 * j}")
            if any(sum(e) % 2 != j % 2 for e, _ in P.items()):
                raise ExpansionError(f"P_{j} violates the parity rule")

    def hermite_coefficients(self, j):
        """``{alpha: c}`` with ``P_j = sum_alpha c H_alpha``."""
        return dict(self.symbols[j].items())


def build_expansion(cumulants, V, nu: int) -> EdgeworthExpansion:
    """Construct the polynomials ``P_0..P_nu``.

    ``cumulants`` is either a :class:`CumulantSet` (sum-of-iid scaling, orders
    3..nu+2 used) or a :class:`GradedCumulants` with general grades.
    """
    if not 0 <= nu <= MAX_NU:
        raise ExpansionError(f"nu must lie in [0, {MAX_NU}]")
    V = check_spd(V)
    q = V.shape[0]
    if isinstance(cumulants, CumulantSet):
        if cumulants.max_order < nu + 2:
            raise ExpansionError(f"cumulants up to order {nu + 2} required, have {cumulants.max_order}")
        graded = GradedCumulants.from_cumulant_set(cumulants, nu)
    else:
        graded = cumulants
    if graded.q != q:
        raise ExpansionError("cumulant dimension does not match covariance")

    # chi_j: polynomial in y = it collecting every cumulant that enters at grade j
    chis = [None]
    for j in range(1, nu + 1):
        chi = MultiPolynomial.zero(q)
        for r in range(1, j + 3):
            T = graded.get(r, j)
            if T is not None:
                chi = chi + tensor_form(T, q).scale(1.0 / math.factorial(r))
        chis.append(chi)

    # exp of the u-series: j pi_j = sum_{i=1}^{j} i chi_i pi_{j-i}
    pis = [MultiPolynomial.constant(q, 1.0)]
    for j in range(1, nu + 1):
        acc = MultiPolynomial.zero(q)
        for i in range(1, j + 1):
            acc = acc + (chis[i] * pis[j - i]).scale(i)
        pis.append(acc.scale(1.0 / j))

    table = HermiteTensorTable(V)
    terms = []
    for pi in pis:
        P = MultiPolynomial.zero(q)
        for alpha, c in pi.items():
            P = P + table[alpha].scale(c)
        terms.append(P)
    return EdgeworthExpansion(q, V, tuple(terms), nu, tuple(pis))


def _gauss_density(V):
    V = np.atleast_2d(V)
    Vinv = np.linalg.inv(V)
    norm = 1.0 / math.sqrt((2 * math.pi) ** V.shape[0] * np.linalg.det(V))

    def phi(X):
        X = np.atleast_2d(X)
        return norm * np.exp(-0.5 * np.einsum("ni,ij,nj->n", X, Vinv, X))

    return phi


def density_term(exp: EdgeworthExpansion, j: int, x):
    """``P_j(x) * phi_{0,V}(x)`` at a point or an ``(N, q)`` batch."""
    if not 0 <= j <= exp.nu:
        raise ExpansionError(f"j must lie in [0, {exp.nu}]")
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    val = exp.terms[j](X) * _gauss_density(exp.V)(X)
    return float(val[0]) if single else val


# -- exact one-dimensional integrals ----------------------------------------

def _cdf_term(exp: EdgeworthExpansion, j: int, t: float) -> float:
    """``int_{-inf}^t P_j phi`` for q = 1 via the Hermite antiderivative."""
    sigma2 = float(exp.V[0, 0])
    if math.isinf(t):
        if t < 0:
            return 0.0
        return 1.0 if j == 0 else 0.0
    phi = math.exp(-0.5 * t * t / sigma2) / math.sqrt(2 * math.pi * sigma2)
    table = HermiteTensorTable(exp.V)
    total = 0.0
    for (a,), c in exp.symbols[j].items():
        if a == 0:
            total += c * special.ndtr(t / math.sqrt(sigma2))
        else:
            total -= c * table[(a - 1,)](np.array([t])) * phi
    return float(total)


def exact_measure(exp: EdgeworthExpansion, j: int, B: Ball) -> float:
    """Closed-form signed measure for q = 1 regions."""
    if exp.q != 1 or B.q != 1:
        raise ExpansionError("closed-form measure needs q = 1")
    lo, hi = B.interval_bounds()
    return _cdf_term(exp, j, hi) - _cdf_term(exp, j, lo)


def signed_measure(exp: EdgeworthExpansion, j: int, B: Ball, mc: MCConfig) -> Estimate:
    """Monte Carlo estimate of ``int_B P_j phi_{0,V}`` from draws of N(0, V)."""
    if not 0 <= j <= exp.nu:
        raise ExpansionError(f"j must lie in [0, {exp.nu}]")
    if B.q != exp.q:
        raise RegionError("region dimension does not match expansion")
    if mc.samples < 1:
        raise ExpansionError("zero Monte Carlo budget")
    P = exp.terms[j]
    return _mc_mean(exp, lambda Z: P(Z) * contains(B, Z), mc)


def _mc_mean(exp, fn, mc):
    s, ss, count = block_sums(gaussian_sampler(exp.V), fn, mc, "edgeworth")
    mean = s / count
    var = max(ss / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return Estimate(float(mean), float(math.sqrt(var / count)))


def expansion_probability(exp: EdgeworthExpansion, B: Ball, n: int, mc: MCConfig | None = None,
                          method: str = "auto") -> Estimate:
    """``sum_j n^{-j/2} P_j(-Phi_{0,V})(B)``.

    ``method="auto"`` uses the closed form when q = 1 and Monte Carlo
    otherwise; all orders share the same draws so the combined standard
    error accounts for their correlation.
    """
    if n < 1:
        raise ExpansionError("n must be positive")
    weights = [n ** (-j / 2) for j in range(exp.nu + 1)]
    if method == "exact" or (method == "auto" and exp.q == 1):
        return Estimate(sum(w * exact_measure(exp, j, B) for j, w in enumerate(weights)), 0.0)
    if mc is None:
        raise ExpansionError("Monte Carlo configuration required")
    poly = sum((P.scale(w) for P, w in zip(exp.terms, weights)), MultiPolynomial.zero(exp.q))
    return _mc_mean(exp, lambda Z: poly(Z) * contains(B, Z), mc)


def quadrature_measure(exp: EdgeworthExpansion, j: int, B: Ball, nodes: int = 40) -> float:
    """Deterministic oracle for ``int_B P_j phi`` when q <= 2.

    q = 1 uses adaptive quadrature; a q = 2 ball uses polar coordinates about
    its centre (Gauss-Legendre in the radius, trapezoid in the angle);
    ``R^2`` uses a Gauss-Hermite tensor grid with ``nodes`` points per axis.
    """
    if exp.q > 2:
        raise ExpansionError("quadrature oracle supports q <= 2 only")
    f = lambda X: density_term(exp, j, X)  # noqa: E731
    if exp.q == 1:
        lo, hi = B.interval_bounds()
        val, _ = integrate.quad(lambda x: f(np.array([[x]]))[0], lo, hi, limit=200, epsabs=1e-13)
        return float(val)
    if B.is_halfline:
        raise RegionError("half-lines need q = 1")
    if B.is_whole:
        z, w = special.roots_hermitenorm(nodes)
        L = np.linalg.cholesky(exp.V)
        Z1, Z2 = np.meshgrid(z, z, indexing="ij")
        pts = np.column_stack([Z1.ravel(), Z2.ravel()]) @ L.T
        W = np.outer(w, w).ravel() / (2 * math.pi)
        return float(np.sum(W * exp.terms[j](pts)))
    r_nodes, r_w = special.roots_legendre(4 * nodes)
    rho = 0.5 * B.radius * (r_nodes + 1)
    rw = 0.5 * B.radius * r_w
    theta = np.linspace(0, 2 * math.pi, 8 * nodes, endpoint=False)
    R, T = np.meshgrid(rho, theta, indexing="ij")
    pts = np.column_stack([(B.center[0] + R * np.cos(T)).ravel(), (B.center[1] + R * np.sin(T)).ravel()])
    W = (rw[:, None] * R * (2 * math.pi / theta.size)).ravel()
    return float(np.sum(W * f(pts)))


def xi_nu(exp: EdgeworthExpansion) -> float:
    """Largest absolute coefficient among ``P_1..P_nu``."""
    if exp.nu < 1:
        raise ExpansionError("xi_nu needs nu >= 1")
    return max(exp.terms[j].max_abs_coefficient() for j in range(1, exp.nu + 1))
