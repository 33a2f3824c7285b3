import math
from fractions import Fraction

import numpy as np
import pytest

from bootedge.bootstrap import (
    SampleError, SampleSet, bootstrap_distribution, compositions, exact_bootstrap_cdf, exact_law,
    product_measure_eval, resample, truncate_and_center,
)
from bootedge.catalog import centered_mean, mean_difference, population
from bootedge.regions import Ball
from bootedge.smooth_model import SmoothStatistic


def halflines(ts):
    return [Ball.halfline(t) for t in ts]


def test_sample_set_invariants():
    with pytest.raises(SampleError):
        SampleSet((np.zeros(1),))
    with pytest.raises(SampleError):
        SampleSet((np.zeros((3, 1)), np.zeros((3, 2))))
    s = SampleSet((np.arange(3.0), np.arange(6.0)))
    assert (s.k, s.d, s.n, s.balance) == (2, 1, 9, 2.0)
    with pytest.raises(ValueError):
        s.samples[0][0, 0] = 5.0


def test_simulate_is_seeded():
    pop = population("exp")
    a = SampleSet.simulate(pop, [10, 12], seed=4)
    b = SampleSet.simulate(pop, [10, 12], seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a.samples, b.samples))
    assert a.provenance == ("exp", 4)


def test_csv_roundtrip(tmp_path):
    s = SampleSet.simulate(population("normal", 2), [4, 5], seed=1)
    p = tmp_path / "s.csv"
    s.to_csv(p)
    back = SampleSet.from_csv(p)
    assert all(np.array_equal(x, y) for x, y in zip(s.samples, back.samples))


@pytest.mark.parametrize("text, where", [
    ("id,x1\n0,1\n", "header"),
    ("sample_id,x1\n0,1\n0,abc\n", ":3:"),
    ("sample_id,x1\n0,1\n0,2,3\n", ":3:"),
    ("sample_id,x1\n1,1\n1,2\n", "ids"),
])
def test_csv_errors(tmp_path, text, where):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(SampleError, match=where):
        SampleSet.from_csv(p)


def test_resample_deterministic_and_uniform():
    s = SampleSet((np.arange(10.0),))
    assert np.array_equal(resample(s, 3).samples[0], resample(s, 3).samples[0])
    hits = sum(int(np.sum(resample(s, i).samples[0] == 1.0)) for i in range(10_000))
    p = hits / 100_000
    assert abs(p - 0.1) < 3 * math.sqrt(0.09 / 100_000)


def test_constant_statistic():
    const = SmoothStatistic("zero", 1, 1, 1, lambda m, a: np.zeros(np.shape(m[0])[:-1] + (1,)))
    s = SampleSet((np.random.default_rng(0).normal(size=20),))
    assert np.all(bootstrap_distribution(const, s, 1000, 1).values == 0.0)


def test_conditional_centering():
    s = SampleSet((np.random.default_rng(1).standard_exponential((30, 2)),))
    v = bootstrap_distribution(centered_mean(2), s, 50_000, 2).values
    se = v.std(axis=0) / math.sqrt(len(v))
    assert np.all(np.abs(v.mean(axis=0)) < 3 * se)


def test_bootstrap_jobs_and_block_invariance():
    s = SampleSet((np.random.default_rng(2).normal(size=15),))
    a = bootstrap_distribution(centered_mean(1), s, 20_000, 5, jobs=1, block=4096)
    b = bootstrap_distribution(centered_mean(1), s, 20_000, 5, jobs=3, block=4096)
    assert np.array_equal(a.values, b.values)
    with pytest.raises(SampleError):
        bootstrap_distribution(centered_mean(1), s, 0, 5)
    with pytest.raises(SampleError):
        bootstrap_distribution(mean_difference(1), s, 10, 5)


def test_compositions():
    counts, w = compositions(3)
    assert len(counts) == 10 and sum(w) == 1
    assert w[[tuple(c) for c in counts].index((1, 1, 1))] == Fraction(6, 27)
    with pytest.raises(SampleError):
        compositions(9)


def test_exact_two_point():
    s = SampleSet((np.array([0.0, 1.0]),))
    # sqrt(2) * (mean* - 1/2) takes -1/sqrt2, 0, 1/sqrt2
    probs = exact_bootstrap_cdf(centered_mean(1), s, halflines([-0.5, 0.0, 0.5, 1.0]), as_fraction=True)
    assert probs == [Fraction(1, 4), Fraction(3, 4), Fraction(3, 4), Fraction(1)]
    vals, w = exact_law(centered_mean(1), s)
    assert sum(w) == 1


def test_exact_partition_sums_to_one():
    s = SampleSet((np.random.default_rng(3).normal(size=5),))
    vals, _ = exact_law(centered_mean(1), s)
    atoms = np.unique(np.round(vals[:, 0], 9))
    gap = np.min(np.diff(atoms)) / 3
    cells = [Ball.interval(a - gap, a + gap) for a in atoms]
    assert sum(exact_bootstrap_cdf(centered_mean(1), s, cells, as_fraction=True)) == 1


def test_exact_vs_mc_n6():
    s = SampleSet((np.random.default_rng(4).standard_exponential(6),))
    grid = np.linspace(-2, 2, 20)
    exact = np.array(exact_bootstrap_cdf(centered_mean(1), s, halflines(grid)))
    mc = bootstrap_distribution(centered_mean(1), s, 200_000, 11).cdf(grid)
    assert np.max(np.abs(exact - mc)) <= 0.006


def test_truncation_inactive_by_default():
    s = SampleSet((np.random.default_rng(5).normal(size=(40, 2)),))
    rep = truncate_and_center(s)
    assert rep.truncation_fraction == [0.0]
    assert np.all(rep.Ymeans[0] == 0.0) or np.max(np.abs(rep.Ymeans[0])) < 1e-15
    np.testing.assert_allclose(rep.Vdagger[0], np.eye(2), atol=1e-12)
    np.testing.assert_allclose(rep.atoms[0].mean(axis=0), 0.0, atol=1e-12)


def test_truncation_outlier():
    x = np.concatenate([np.random.default_rng(6).normal(size=19), [60.0]])
    rep = truncate_and_center(SampleSet((x,)), threshold=3.0)
    assert rep.truncation_fraction == [pytest.approx(1 / 20)]
    Z = (x - x.mean()) / x.std()
    assert rep.Ymeans[0][0] == pytest.approx(-Z[-1] / 20)
    np.testing.assert_allclose(rep.atoms[0].mean(axis=0), 0.0, atol=1e-12)
    large = truncate_and_center(SampleSet((x,)), "keep_large", threshold=3.0)
    assert large.truncation_fraction == [pytest.approx(19 / 20)]
    with pytest.raises(SampleError):
        truncate_and_center(SampleSet((x,)), "keep_middle")


def test_truncation_shift_bounded():
    pop = population("normal")
    worst = 0.0
    for i in range(200):
        s = SampleSet.simulate(pop, [100], seed=i)
        worst = max(worst, float(np.linalg.norm(truncate_and_center(s).a)))
    assert worst <= 1.0


def test_product_measure_whole_and_factorisation():
    rng = np.random.default_rng(7)
    s1 = SampleSet((rng.normal(size=5),))
    s2 = SampleSet((rng.normal(size=6),))
    both = SampleSet(s1.samples + s2.samples)
    S1, S2 = Ball.halfline(0.2), Ball.interval(-0.5, 1.0)
    assert product_measure_eval("Q", [Ball.whole(1)], s1, exact=True) == 1.0
    a = product_measure_eval("Q", [S1], s1, exact=True)
    b = product_measure_eval("Q", [S2], s2, exact=True)
    assert product_measure_eval("Q", [S1, S2], both, exact=True) == a * b
    assert product_measure_eval("Q", [S1, Ball.whole(1)], both, exact=True) == a


def test_product_measure_matches_exact_bootstrap():
    s = SampleSet((np.random.default_rng(8).standard_exponential(6),))
    B = Ball.halfline(0.3)
    exact = product_measure_eval("Q", [B], s, exact=True)
    assert exact == pytest.approx(exact_bootstrap_cdf(centered_mean(1), s, [B])[0], abs=1e-15)
    assert abs(product_measure_eval("Q", [B], s, reps=200_000, seed=1) - exact) < 0.006
    # untruncated dagger atoms are the standardised atoms
    sd = s.samples[0][:, 0].std()
    assert product_measure_eval("Qdagger", [B], s, exact=True) == pytest.approx(
        exact_bootstrap_cdf(centered_mean(1), s, [Ball.halfline(0.3 * sd)])[0])


def test_product_measure_errors():
    s = SampleSet((np.arange(10.0),))
    with pytest.raises(SampleError):
        product_measure_eval("P", [Ball.whole(1)], s)
    with pytest.raises(SampleError):
        product_measure_eval("Q", [Ball.whole(1)], s, exact=True)
    with pytest.raises(SampleError):
        product_measure_eval("Q", [Ball.whole(2)], s)
