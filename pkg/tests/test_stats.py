import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from qsbo.errors import DegenerateDataError, InvalidInputError
from qsbo.stats import (
    midranks,
    paired_t_test,
    signed_rank_distribution,
    student_t_sf,
    summarize,
    two_sample_t_test,
    wilcoxon_signed_rank,
)

samples = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30)


def enumerate_wilcoxon(d):
    """W = min rank sum and exact two-sided p by listing every sign pattern."""
    d = [x for x in d if x != 0]
    ranks = sps.rankdata(np.abs(d))
    plus = sum(r for r, x in zip(ranks, d) if x > 0)
    minus = sum(r for r, x in zip(ranks, d) if x < 0)
    w = min(plus, minus)
    hits = 0
    patterns = list(itertools.product([0, 1], repeat=len(d)))
    for signs in patterns:
        s = sum(r for r, keep in zip(ranks, signs) if keep)
        hits += s <= w + 1e-9
    return w, min(1.0, 2 * hits / len(patterns))


class TestSummarize:
    def test_three(self):
        s = summarize([1, 2, 3])
        assert (s.mean, s.median, s.std_dev, s.min, s.max, s.n) == (2, 2, 1, 1, 3, 3)

    def test_single(self):
        s = summarize([5])
        assert (s.mean, s.median, s.std_dev, s.min, s.max) == (5, 5, 0, 5, 5)

    def test_even_median(self):
        assert summarize([1, 2, 3, 4]).median == 2.5

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            summarize([])

    @given(samples, st.randoms())
    def test_permutation_invariant(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        a, b = summarize(values), summarize(shuffled)
        assert a.median == b.median and a.min == b.min and a.max == b.max
        assert a.mean == pytest.approx(b.mean, abs=1e-9)
        assert a.std_dev == pytest.approx(b.std_dev, abs=1e-9)
        assert a.min <= a.median <= a.max and a.std_dev >= 0


class TestStudentT:
    def test_zero(self):
        for df in (1, 3, 19, 100):
            assert student_t_sf(0.0, df) == 0.5

    def test_cauchy(self):
        assert student_t_sf(1.0, 1) == pytest.approx(0.25, abs=1e-12)
        for t in (-3.0, -0.5, 0.7, 12.0):
            assert student_t_sf(t, 1) == pytest.approx(0.5 - math.atan(t) / math.pi, abs=1e-12)

    def test_table(self):
        assert student_t_sf(2.093, 19) == pytest.approx(0.025, abs=1e-4)

    def test_quadrature(self):
        mpmath.mp.dps = 30
        for df in (2, 5, 19, 38):
            c = mpmath.gamma((df + 1) / mpmath.mpf(2)) / (
                mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / mpmath.mpf(2)))
            for t in (0.3, 1.7, 3.64, 8.0):
                tail = mpmath.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / mpmath.mpf(2)),
                                   [t, 2 * t + 10, mpmath.inf])
                assert student_t_sf(t, df) == pytest.approx(float(tail), abs=1e-10)
                assert student_t_sf(-t, df) == pytest.approx(1 - float(tail), abs=1e-10)

    def test_invalid_df(self):
        with pytest.raises(InvalidInputError):
            student_t_sf(1.0, 0)


class TestPairedT:
    def test_symmetric_differences(self):
        r = paired_t_test([1.0, -1.0], [0.0, 0.0])
        assert r.statistic == 0.0 and r.p_value == 1.0 and r.n_pairs == 2

    def test_matches_reference(self):
        rng = np.random.default_rng(0)
        b = rng.normal(size=20)
        a = b + 1.0 + 0.01 * rng.normal(size=20)
        ours = paired_t_test(a, b)
        ref = sps.ttest_rel(a, b)
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-300)

    def test_swap_negates(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(2, 15))
        ab, ba = paired_t_test(a, b), paired_t_test(b, a)
        assert ab.statistic == pytest.approx(-ba.statistic)
        assert ab.p_value == pytest.approx(ba.p_value)

    def test_degenerate(self):
        with pytest.raises(DegenerateDataError):
            paired_t_test([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(DegenerateDataError):
            paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
        with pytest.raises(InvalidInputError):
            paired_t_test([1.0], [0.0])
        with pytest.raises(InvalidInputError):
            paired_t_test([1.0, 2.0], [0.0])


class TestTwoSampleT:
    @pytest.mark.parametrize("equal_var", [True, False])
    def test_matches_reference(self, equal_var):
        rng = np.random.default_rng(2)
        a = rng.normal(0.0, 0.3, 20)
        b = rng.normal(0.5, 1.0, 20)
        ours = two_sample_t_test(a, b, equal_var=equal_var)
        ref = sps.ttest_ind(a, b, equal_var=equal_var)
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-8)

    def test_pooled_reproduces_reported_p(self):
        # the reported t/p pairs correspond to 38 degrees of freedom
        for t, p in ((-2.94, 0.0055), (-2.73, 0.0096), (-3.64, 0.0008)):
            assert 2 * student_t_sf(abs(t), 38) == pytest.approx(p, abs=1e-4)


class TestWilcoxon:
    def test_all_positive(self):
        r = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5)
        assert r.statistic == 0.0
        assert r.p_value == pytest.approx(2 / 32, abs=1e-15)
        assert enumerate_wilcoxon([1, 2, 3, 4, 5]) == (0.0, 2 / 32)

    def test_midranks(self):
        r = wilcoxon_signed_rank([1.0, -1.0], [0.0, 0.0])
        assert r.statistic == 1.5 and r.p_value == 1.0
        assert enumerate_wilcoxon([1.0, -1.0]) == (1.5, 1.0)

    def test_zero_differences_dropped(self):
        r = wilcoxon_signed_rank([1, 2, 3, 4, 5, 7], [0, 0, 0, 0, 0, 7])
        assert r.n_pairs == 5 and r.p_value == pytest.approx(2 / 32)

    def test_degenerate(self):
        with pytest.raises(DegenerateDataError):
            wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-6, 6).filter(bool), min_size=1, max_size=12))
    def test_matches_enumeration(self, d):
        r = wilcoxon_signed_rank(d, [0] * len(d))
        w, p = enumerate_wilcoxon(d)
        assert r.statistic == pytest.approx(w)
        assert r.p_value == pytest.approx(p, abs=1e-12)

    def test_matches_scipy_exact(self):
        rng = np.random.default_rng(3)
        for n in (6, 12, 20, 25):
            d = rng.normal(0.4, 1.0, n)
            ours = wilcoxon_signed_rank(d, np.zeros(n))
            ref = sps.wilcoxon(d, method="exact")
            assert ours.statistic == ref.statistic
            assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-10)

    def test_normal_approximation(self):
        rng = np.random.default_rng(4)
        d = rng.normal(0.3, 1.0, 40)
        ours = wilcoxon_signed_rank(d, np.zeros(40))
        ref = sps.wilcoxon(d, method="approx", correction=True)
        assert ours.statistic == ref.statistic
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-10)

    @pytest.mark.parametrize("w, p", [(25, 0.0017), (15, 0.0003), (16, 0.0003)])
    def test_reported_exact_p(self, w, p):
        dist = signed_rank_distribution(range(1, 21))
        assert 2 * sum(q for s, q in dist.items() if s <= w) == pytest.approx(p, abs=5e-5)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_distribution_sums_to_one(self, n):
        dist = signed_rank_distribution(range(1, n + 1))
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-14)
        assert len(dist) == n * (n + 1) // 2 + 1

    @given(st.lists(st.floats(-100, 100).filter(bool), min_size=1, max_size=20))
    def test_swap_symmetric(self, d):
        zeros = [0.0] * len(d)
        ab, ba = wilcoxon_signed_rank(d, zeros), wilcoxon_signed_rank(zeros, d)
        assert ab.statistic == ba.statistic and ab.p_value == ba.p_value


def test_midranks():
    np.testing.assert_array_equal(midranks([3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0])
