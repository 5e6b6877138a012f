import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsbo.errors import InvalidInputError
from qsbo.rank_transform import (
    beta_order_variance,
    build_latent_targets,
    compute_ranks,
    normal_cdf,
    normalized_rank,
    probit,
    z_variance,
)

mpmath.mp.dps = 40

finite_floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def mp_probit(u, tol=mpmath.mpf("1e-30")):
    """Bisection on the mpmath normal CDF."""
    lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
    target = mpmath.mpf(u)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if mpmath.ncdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def mc_order_variance(n, samples, seed, chunk=100_000):
    """Sample variance of each sorted position of n uniforms."""
    rng = np.random.default_rng(seed)
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u = np.sort(rng.random((m, n)), axis=1)
        s1 += u.sum(axis=0)
        s2 += (u * u).sum(axis=0)
        done += m
    mean = s1 / samples
    return (s2 - samples * mean * mean) / (samples - 1)


class TestComputeRanks:
    def test_examples(self):
        assert compute_ranks([3.0, 1.0, 2.0]) == [3, 1, 2]
        assert compute_ranks([5.0]) == [1]

    def test_ties_go_to_earlier_trial(self):
        values = [1.0, 1.0, 0.5]
        expected = [0] * 3
        for pos, idx in enumerate(sorted(range(3), key=lambda i: values[i]), start=1):
            expected[idx] = pos  # Python's sort is stable
        assert expected == [2, 3, 1]
        assert compute_ranks(values) == expected

    @pytest.mark.parametrize("bad", [[], [1.0, math.nan], [math.inf]])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(InvalidInputError):
            compute_ranks(bad)

    @given(st.lists(finite_floats, min_size=1, max_size=40))
    def test_is_permutation_counting_smaller(self, values):
        ranks = compute_ranks(values)
        assert sorted(ranks) == list(range(1, len(values) + 1))
        for i, v in enumerate(values):
            smaller = sum(w < v for w in values)
            earlier_ties = sum(w == v for w in values[:i])
            assert ranks[i] == 1 + smaller + earlier_ties


class TestNormalizedRank:
    @pytest.mark.parametrize("r, n, u", [(1, 1, 0.5), (1, 5, 0.1), (3, 5, 0.5)])
    def test_examples(self, r, n, u):
        assert normalized_rank(r, n) == pytest.approx(u, abs=1e-15)

    def test_clipping(self):
        assert normalized_rank(1, 10**7) == 1e-6
        assert normalized_rank(10**7, 10**7) == 1 - 1e-6

    @pytest.mark.parametrize("r, n", [(0, 5), (6, 5), (1, 0)])
    def test_out_of_range(self, r, n):
        with pytest.raises(InvalidInputError):
            normalized_rank(r, n)


class TestProbit:
    def test_median(self):
        assert probit(0.5) == 0.0

    @pytest.mark.parametrize("u, z", [(0.975, 1.959964), (0.1, -1.281552)])
    def test_table_values(self, u, z):
        oracle = float(mp_probit(u))
        assert oracle == pytest.approx(z, abs=5e-7)
        assert probit(u) == pytest.approx(oracle, abs=1e-9)

    def test_accuracy_against_mpmath_bisection(self):
        grid = np.concatenate([
            np.geomspace(1e-6, 0.02425, 15),
            np.linspace(0.03, 0.97, 15),
            1 - np.geomspace(1e-6, 0.02425, 15),
        ])
        for u in grid:
            assert abs(probit(u) - float(mp_probit(u))) <= 1e-9, u

    def test_roundtrip_normal_cdf(self):
        for x in np.linspace(-5, 5, 401):
            u = float(mpmath.ncdf(x))
            assert probit(u) == pytest.approx(x, abs=1e-8)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, u):
        with pytest.raises(InvalidInputError):
            probit(u)

    def test_normal_cdf_matches_mpmath(self):
        for x in np.linspace(-8, 8, 33):
            assert normal_cdf(x) == pytest.approx(float(mpmath.ncdf(x)), rel=1e-13, abs=1e-300)


class TestOrderVariance:
    def test_uniform(self):
        assert beta_order_variance(1, 1) == pytest.approx(1 / 12)

    @pytest.mark.parametrize("r, expected", [(3, 9 / 252), (1, 5 / 252)])
    def test_examples(self, r, expected):
        assert beta_order_variance(r, 5) == pytest.approx(expected, rel=1e-14)

    def test_matches_monte_carlo(self):
        n = 5
        mc = mc_order_variance(n, 1_000_000, seed=11)
        exact = [beta_order_variance(r, n) for r in range(1, n + 1)]
        np.testing.assert_allclose(exact, mc, rtol=0.02)

    def test_matches_monte_carlo_n50(self):
        n = 50
        mc = mc_order_variance(n, 1_000_000, seed=12)
        exact = [beta_order_variance(r, n) for r in range(1, n + 1)]
        np.testing.assert_allclose(exact, mc, rtol=0.02)


class TestZVariance:
    def test_median_rank(self):
        assert z_variance(3, 5) == pytest.approx(9 / 252 * 2 * math.pi, rel=1e-12)
        assert z_variance(3, 5) == pytest.approx(0.224399, abs=1e-6)

    def test_extreme_rank(self):
        z = mp_probit(mpmath.mpf(1) / 10)
        oracle = float(mpmath.mpf(5) / 252 / mpmath.npdf(z) ** 2)
        assert z_variance(1, 5) == pytest.approx(oracle, rel=1e-9)
        assert z_variance(1, 5) == pytest.approx(0.644, abs=5e-4)

    @given(st.integers(1, 2000), st.data())
    def test_symmetric(self, n, data):
        r = data.draw(st.integers(1, n))
        assert z_variance(r, n) == pytest.approx(z_variance(n + 1 - r, n), rel=1e-9)

    @pytest.mark.parametrize("n", [3, 4, 7, 20, 35, 100])
    def test_extremes_noisiest(self, n):
        v = [z_variance(r, n) for r in range(1, n + 1)]
        assert max(v) == pytest.approx(v[0]) == pytest.approx(v[-1])
        assert min(v) == pytest.approx(v[(n - 1) // 2])

    @pytest.mark.parametrize("n", [1, 2, 10, 1000, 10**5, 10**6])
    def test_finite_for_large_n(self, n):
        for r in {r for r in (1, 2, n // 2 + 1, n - 1, n) if 1 <= r <= n}:
            assert math.isfinite(z_variance(r, n)) and z_variance(r, n) > 0


class TestLatentTargets:
    def test_single_point(self):
        (t,) = build_latent_targets([2.0])
        assert t.u == 0.5 and t.z == 0.0 and t.rank == 1
        assert t.variance == pytest.approx(2 * math.pi / 12)

    def test_order_preserved(self):
        values = [0.3, -1.0, 2.5, 0.0]
        targets = build_latent_targets(values)
        assert [t.rank for t in targets] == compute_ranks(values)
        order_v = np.argsort(values)
        order_z = np.argsort([t.z for t in targets])
        np.testing.assert_array_equal(order_v, order_z)

    def test_scale_invariance(self):
        assert build_latent_targets([1.0, 2.0, 3.0]) == build_latent_targets([10.0, 20.0, 30.0])

    @settings(max_examples=50)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=30),
           st.sampled_from([np.exp, np.tanh, lambda y: y ** 3 + 2 * y, lambda y: 7 * y - 3]))
    def test_monotone_invariance(self, values, g):
        transformed = [float(g(v)) for v in values]
        # strictly increasing maps can merge distinct values in floating point
        if len(set(transformed)) != len(set(values)):
            return
        assert build_latent_targets(transformed) == build_latent_targets(values)

    def test_point_mass_ablation(self):
        targets = build_latent_targets([3.0, 1.0, 2.0], point_mass=True)
        assert all(t.variance == 0.0 for t in targets)
        assert [t.z for t in targets] == [t.z for t in build_latent_targets([3.0, 1.0, 2.0])]
