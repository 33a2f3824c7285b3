import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bootedge.polynomial import (
    MultiPolynomial, PolynomialError, add, compose_affine, multiply, poly_eval, scale, tensor_form,
)

x1 = MultiPolynomial.variable(0, 1)


def test_square_of_variable():
    assert multiply(x1, x1) == MultiPolynomial.monomial((2,))


def test_scale_by_zero_is_empty():
    p = scale(x1 * x1 + 3.0, 0.0)
    assert p.is_zero() and p.degree() == 0 and len(p) == 0


def test_compose_affine_doubling_plus_one():
    q = compose_affine(x1, 2 * np.eye(1), [1.0])
    assert q == MultiPolynomial(1, {(1,): 2.0, (0,): 1.0})


def test_eval_examples():
    assert poly_eval(x1 * x1 - 1.0, [2.0]) == 3.0
    assert poly_eval(MultiPolynomial.zero(3), [1.0, 2.0, 3.0]) == 0.0


def test_nvars_mismatch_raises():
    with pytest.raises(PolynomialError):
        add(x1, MultiPolynomial.variable(0, 2))
    with pytest.raises(PolynomialError):
        x1([1.0, 2.0])


def test_zero_coefficients_pruned():
    p = MultiPolynomial(2, {(1, 0): 1.0, (0, 1): 0.0})
    assert p.terms == {(1, 0): 1.0}
    assert (x1 - x1).is_zero()


def test_derivative_and_reflect():
    p = MultiPolynomial(2, {(3, 1): 2.0, (0, 2): -1.0})
    assert p.derivative(0) == MultiPolynomial(2, {(2, 1): 6.0})
    assert p.reflect() == MultiPolynomial(2, {(3, 1): 2.0, (0, 2): -1.0})
    assert (x1 ** 3).reflect() == -(x1 ** 3)


def test_batch_evaluation_matches_pointwise(rng):
    p = MultiPolynomial(3, {(1, 2, 0): 1.5, (0, 0, 3): -2.0, (0, 0, 0): 0.25})
    X = rng.normal(size=(20, 3))
    np.testing.assert_allclose(p(X), [p(x) for x in X])


def test_tensor_form_is_quadratic_form(rng):
    A = rng.normal(size=(3, 3))
    A = A + A.T
    p = tensor_form(A, 3)
    x = rng.normal(size=3)
    assert p(x) == pytest.approx(x @ A @ x)


coef = st.floats(-5, 5, allow_nan=False)
poly2 = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=6).map(
    lambda t: MultiPolynomial(2, t))


@settings(max_examples=60, deadline=None)
@given(poly2, poly2, st.tuples(coef, coef))
def test_arithmetic_is_pointwise(p, q, pt):
    x = np.array(pt)
    assert (p + q)(x) == pytest.approx(p(x) + q(x), abs=1e-8)
    assert (p * q)(x) == pytest.approx(p(x) * q(x), rel=1e-9, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(poly2, st.tuples(coef, coef, coef, coef), st.tuples(coef, coef), st.tuples(coef, coef))
def test_compose_affine_is_pointwise(p, m, c, y):
    M = np.array(m).reshape(2, 2)
    c = np.array(c)
    y = np.array(y)
    assert p.compose_affine(M, c)(y) == pytest.approx(p(M @ y + c), rel=1e-8, abs=1e-6)
