"""Sparse multivariate polynomials over real coefficients.

A polynomial is a map from exponent vectors (tuples of non-negative ints,
one entry per variable) to float coefficients.  Only exact zeros are pruned;
callers that want a tolerance use :meth:`MultiPolynomial.pruned`.
"""
from __future__ import annotations

import numbers
from typing import Iterable, Mapping

import numpy as np


class PolynomialError(ValueError):
    pass


def _check_exponent(exps, nvars):
    if len(exps) != nvars:
        raise PolynomialError(f"exponent vector {exps} has length {len(exps)}, expected {nvars}")
    if any(e < 0 for e in exps):
        raise PolynomialError(f"negative exponent in {exps}")


class MultiPolynomial:
    """Polynomial in ``nvars`` real variables.

    Instances are treated as immutable: every operation returns a new object.

    >>> x = MultiPolynomial.variable(0, 1)
    >>> (x * x - 1)(2.0)
    3.0
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, float] | None = None):
        if nvars < 1:
            raise PolynomialError("nvars must be positive")
        self.nvars = int(nvars)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            _check_exponent(exps, self.nvars)
            coef = float(coef)
            if coef != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coef
        self._terms = {e: c for e, c in clean.items() if c != 0.0}

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, i, nvars):
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def monomial(cls, exps, coef=1.0):
        exps = tuple(exps)
        return cls(len(exps), {exps: coef})

    @classmethod
    def linear(cls, coefs, const=0.0):
        """``const + sum_i coefs[i] * x_i``."""
        coefs = np.asarray(coefs, dtype=float)
        m = len(coefs)
        terms = {(0,) * m: const}
        for i, c in enumerate(coefs):
            e = [0] * m
            e[i] = 1
            terms[tuple(e)] = c
        return cls(m, terms)

    # -- basic queries -------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self):
        return not self._terms

    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(e) for e in self._terms)

    def coefficient(self, exps) -> float:
        return self._terms.get(tuple(exps), 0.0)

    def max_abs_coefficient(self) -> float:
        if not self._terms:
            return 0.0
        return max(abs(c) for c in self._terms.values())

    def homogeneous_part(self, deg):
        return MultiPolynomial(self.nvars, {e: c for e, c in self._terms.items() if sum(e) == deg})

    def pruned(self, tol):
        return MultiPolynomial(self.nvars, {e: c for e, c in self._terms.items() if abs(c) > tol})

    def reflect(self):
        """Return ``p(-x)``."""
        return MultiPolynomial(
            self.nvars, {e: (-c if sum(e) % 2 else c) for e, c in self._terms.items()}
        )

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MultiPolynomial):
            if other.nvars != self.nvars:
                raise PolynomialError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, numbers.Real):
            return MultiPolynomial.constant(self.nvars, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return MultiPolynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPolynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor):
        factor = float(factor)
        return MultiPolynomial(self.nvars, {e: c * factor for e, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return MultiPolynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise PolynomialError("negative power")
        out = MultiPolynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def derivative(self, i):
        terms = {}
        for e, c in self._terms.items():
            if e[i] > 0:
                f = list(e)
                f[i] -= 1
                terms[tuple(f)] = terms.get(tuple(f), 0.0) + c * e[i]
        return MultiPolynomial(self.nvars, terms)

    def compose_affine(self, M, c=None):
        """Return ``q(y) = p(M y + c)``.

        ``M`` has shape ``(nvars, m)``; the result is a polynomial in ``m``
        variables.
        """
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != self.nvars:
            raise PolynomialError(f"M has {M.shape[0]} rows, polynomial has {self.nvars} variables")
        m = M.shape[1]
        c = np.zeros(self.nvars) if c is None else np.asarray(c, dtype=float).reshape(-1)
        if c.shape[0] != self.nvars:
            raise PolynomialError("offset length mismatch")
        forms = [MultiPolynomial.linear(M[i], c[i]) for i in range(self.nvars)]
        powers = [[MultiPolynomial.constant(m, 1.0)] for _ in range(self.nvars)]
        out = MultiPolynomial.zero(m)
        for e, coef in self._terms.items():
            term = MultiPolynomial.constant(m, coef)
            for i, k in enumerate(e):
                while len(powers[i]) <= k:
                    powers[i].append(powers[i][-1] * forms[i])
                if k:
                    term = term * powers[i][k]
            out = out + term
        return out

    # -- evaluation ---------------------------------------------------
    def __call__(self, x):
        """Evaluate at a point (shape ``(nvars,)``) or a batch ``(N, nvars)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        X = x.reshape(1, -1) if single else x
        if X.shape[-1] != self.nvars:
            raise PolynomialError(f"expected {self.nvars} coordinates, got {X.shape[-1]}")
        out = np.zeros(X.shape[0])
        if self._terms:
            maxdeg = [max(e[i] for e in self._terms) for i in range(self.nvars)]
            pw = []
            for i in range(self.nvars):
                cols = [np.ones(X.shape[0])]
                for _ in range(maxdeg[i]):
                    cols.append(cols[-1] * X[:, i])
                pw.append(cols)
            for e, c in self._terms.items():
                term = np.full(X.shape[0], c)
                for i, k in enumerate(e):
                    if k:
                        term = term * pw[i][k]
                out += term
        return float(out[0]) if single else out

    # -- comparison / display -----------------------------------------
    def __eq__(self, other):
        if not isinstance(other, MultiPolynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    def allclose(self, other, atol=1e-12):
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def __repr__(self):
        if not self._terms:
            return f"MultiPolynomial({self.nvars}, 0)"
        parts = []
        for e, c in sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0])):
            mono = "*".join(
                f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k
            )
            parts.append(f"{c:+.6g}" + (f"*{mono}" if mono else ""))
        return f"MultiPolynomial({self.nvars}, {' '.join(parts)})"


def add(p: MultiPolynomial, q: MultiPolynomial) -> MultiPolynomial:
    return p + q


def multiply(p: MultiPolynomial, q: MultiPolynomial) -> MultiPolynomial:
    return p * q


def scale(p: MultiPolynomial, factor: float) -> MultiPolynomial:
    return p.scale(factor)


def compose_affine(p: MultiPolynomial, M, c=None) -> MultiPolynomial:
    return p.compose_affine(M, c)


def poly_eval(p: MultiPolynomial, x) -> float:
    return p(x)


def tensor_form(tensor, nvars: int | None = None) -> MultiPolynomial:
    """Polynomial ``sum_{i1..ir} T[i1,...,ir] y_{i1} ... y_{ir}`` of a dense tensor."""
    T = np.asarray(tensor, dtype=float)
    r = T.ndim
    q = nvars if nvars is not None else (T.shape[0] if r else 1)
    if r == 0:
        return MultiPolynomial.constant(q, float(T))
    terms: dict = {}
    for idx in np.ndindex(*T.shape):
        v = T[idx]
        if v == 0.0:
            continue
        e = [0] * q
        for i in idx:
            e[i] += 1
        e = tuple(e)
        terms[e] = terms.get(e, 0.0) + v
    return MultiPolynomial(q, terms)


def sum_polys(polys: Iterable[MultiPolynomial], nvars: int) -> MultiPolynomial:
    out = MultiPolynomial.zero(nvars)
    for p in polys:
        out = out + p
    return out
