import math

import numpy as np
import pytest

from bootedge.bootstrap import SampleSet, bootstrap_distribution
from bootedge.catalog import centered_mean, lift, mean_difference, studentized, variance
from bootedge.polynomial import MultiPolynomial
from bootedge.regions import Ball
from bootedge.smooth_model import (
    DegenerateStatistic, SmoothStatistic, StatisticError, approximate_cumulants, cumulants_for_samples,
    finite_difference, region_dagger_image, region_dagger_membership, region_membership,
    remainder_constant, taylor_expand,
)
from bootedge.tensors import sample_cumulants


def test_taylor_linear_statistic_is_exact():
    stat = mean_difference(2)
    anchors = [np.array([0.3, -1.0]), np.array([2.0, 0.5])]
    exp = taylor_expand(stat, anchors, 40, 2)
    x = np.array([0.1, 0.2, -0.3, 0.4])
    np.testing.assert_allclose(exp(x, 40), [0.4, -0.2])
    assert all(p.is_zero() for comp in exp.grades for p in comp[1:])


def test_taylor_variance_grades():
    a = np.array([0.5, 1.25])  # mean 0.5, second moment 1.25
    exp = taylor_expand(variance(), [a], 100, 1)
    x0 = MultiPolynomial.variable(0, 2)
    x1 = MultiPolynomial.variable(1, 2)
    assert exp.grades[0][0].allclose(x1 - x0.scale(1.0))
    assert exp.grades[0][1].allclose(-(x0 * x0))
    assert exp.grades[0][2].is_zero()
    assert remainder_constant(variance(), [a], 100, 1) < 1e-10


def test_taylor_studentized_matches_finite_difference():
    stat = studentized(1)
    a = np.array([0.2, 1.5])
    fd = SmoothStatistic(stat.name, 1, 2, 1, stat.value, finite_difference(stat), lift=stat.lift)
    exact = taylor_expand(stat, [a], 50, 1)
    approx = taylor_expand(fd, [a], 50, 1)
    for g, tol in ((0, 1e-7), (1, 1e-6), (2, 1e-3)):
        assert approx.grades[0][g].allclose(exact.grades[0][g], atol=tol)


def test_remainder_shrinks_with_n():
    stat = studentized(1)
    a = np.array([0.0, 1.0])
    errs = []
    for n in (100, 1000, 10000):
        C = remainder_constant(stat, [a], n, 1)
        errs.append(C * n ** (-1.5) * math.log(n) ** 4)
    assert errs[0] > errs[1] > errs[2]


def test_taylor_errors():
    with pytest.raises(StatisticError):
        taylor_expand(centered_mean(1), [np.zeros(1)], 0, 1)
    limited = SmoothStatistic("lim", 1, 1, 1, centered_mean(1).value, max_order=2)
    with pytest.raises(StatisticError):
        taylor_expand(limited, [np.zeros(1)], 10, 1)


def test_centering_check():
    bad = SmoothStatistic("bad", 1, 1, 1, lambda m, a: np.asarray(m[0]) + 1.0)
    with pytest.raises(StatisticError):
        bad.check_centering([np.zeros(1)])
    centered_mean(1).check_centering([np.ones(1)])


def test_mean_cumulants_are_sample_cumulants(rng):
    X = rng.standard_exponential((60, 1))
    cs = sample_cumulants(X, 3)
    ac = approximate_cumulants(centered_mean(1), [cs], [60], 1)
    np.testing.assert_allclose(ac.W, cs.tensor(2))
    np.testing.assert_allclose(ac.raw.get(3, 1), cs.tensor(3))
    assert ac.raw.get(1, 1) is None
    np.testing.assert_allclose(ac.root @ ac.root, ac.W)


def test_two_sample_rho_scaling(rng):
    X1, X2 = rng.standard_exponential((30, 1)), rng.standard_exponential((60, 1))
    c1, c2 = sample_cumulants(X1, 3), sample_cumulants(X2, 3)
    ac = approximate_cumulants(mean_difference(1), [c1, c2], [30, 60], 1)
    # rho_1 = 3, rho_2 = 1.5
    assert ac.W[0, 0] == pytest.approx(3 * c1.tensor(2)[0, 0] + 1.5 * c2.tensor(2)[0, 0])
    k3 = ac.raw.get(3, 1)[0, 0, 0]
    assert k3 == pytest.approx(9 * c1.tensor(3)[0, 0, 0] - 2.25 * c2.tensor(3)[0, 0, 0])


def test_variance_closed_form_moments(rng):
    X = rng.standard_exponential(80)
    Y = lift(variance(), X)
    ac = approximate_cumulants(variance(), [sample_cumulants(Y, 3)], [80], 1)
    Xc = X - X.mean()
    m2, m4 = np.mean(Xc**2), np.mean(Xc**4)
    # E* of the resampled plug-in variance is (1 - 1/n) m2
    assert ac.raw.get(1, 1)[0] == pytest.approx(-m2)
    assert ac.W[0, 0] == pytest.approx(m4 - m2**2)


def test_studentized_cumulants_match_bootstrap(rng):
    n = 400
    X = rng.standard_exponential(n)
    stat = studentized(1)
    Y = lift(stat, X)
    ac = cumulants_for_samples(stat, [Y], 1)
    dist = bootstrap_distribution(stat, SampleSet((X[:, None],)), 200_000, seed=9)
    v = dist.values[:, 0]
    se = v.std() / math.sqrt(v.size)
    assert abs(v.mean() - ac.mean(n)[0]) < 4 * se + 2e-3
    k3 = np.mean((v - v.mean()) ** 3)
    assert k3 == pytest.approx(ac.cumulant(3, n)[0, 0, 0], abs=0.03)
    assert ac.W[0, 0] == pytest.approx(1.0)


def test_cumulant_input_errors(rng):
    cs = sample_cumulants(rng.normal(size=(20, 1)), 3)
    with pytest.raises(StatisticError):
        approximate_cumulants(centered_mean(1), [cs], [20], 2)
    with pytest.raises(StatisticError):
        approximate_cumulants(mean_difference(1), [cs, cs], [2, 400], 1)
    with pytest.raises(StatisticError):
        approximate_cumulants(centered_mean(1), [cs, cs], [20, 20], 1)
    flat = sample_cumulants(np.ones((20, 1)), 3)
    with pytest.raises(DegenerateStatistic):
        approximate_cumulants(centered_mean(1), [flat], [20], 1)


def test_region_dagger_roundtrip(rng):
    stat = centered_mean(2)
    anchors = [np.zeros(2)]
    V = [np.array([[2.0, 0.3], [0.3, 0.5]])]
    m = [np.array([0.01, -0.02])]
    B = Ball(2, center=(0.5, 0.0), radius=1.2)
    X = rng.normal(size=(500, 2))
    inside = region_membership(stat, anchors, B, 50, X)
    Y = region_dagger_image(X, V, m, 50, 1, 2)
    np.testing.assert_array_equal(region_dagger_membership(stat, anchors, B, 50, Y, V, m), inside)
