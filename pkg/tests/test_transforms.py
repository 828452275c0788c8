import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlmeta.transforms import (ConfusionMatrix, ProportionOutcome, backtransform_ci, benchmark_accuracy,
                               benchmark_from_matrix, class_metrics, da_inverse, da_inverse_array,
                               da_transform, da_transform_array, harmonic_mean_n, overall_accuracy)


def da(k, n):
    return da_transform(ProportionOutcome(k, n))


class TestProportionOutcome:

    def test_p(self):
        assert ProportionOutcome(17, 20).p == 0.85

    @pytest.mark.parametrize("k,n", [(-1, 10), (11, 10), (0, 0), (3, -2)])
    def test_rejects_out_of_range(self, k, n):
        with pytest.raises(ValueError):
            ProportionOutcome(k, n)

    def test_rejects_fractional(self):
        with pytest.raises(ValueError):
            ProportionOutcome(2.5, 10)


class TestDaTransform:

    def test_half(self):
        assert da(5, 10).theta == pytest.approx(math.pi / 4, abs=1e-15)

    def test_variance(self):
        assert da(10, 10).v == pytest.approx(1.0 / 42.0, abs=1e-15)

    def test_all_correct_mpmath_value(self):
        # 30-digit mpmath evaluation of (asin(sqrt(10/11)) + asin(1)) / 2
        assert da(10, 10).theta == pytest.approx(1.417657642210062, abs=1e-12)

    def test_endpoints_finite(self):
        for n in (1, 7, 1000):
            assert 0.0 < da(0, n).theta < da(n, n).theta < math.pi / 2

    def test_symmetry(self):
        # theta(k, n) + theta(n - k, n) = pi / 2
        for n in (3, 10, 99):
            for k in range(n + 1):
                assert da(k, n).theta + da(n - k, n).theta == pytest.approx(math.pi / 2, abs=1e-14)

    @given(st.integers(1, 3000), st.data())
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_in_k(self, n, data):
        k = data.draw(st.integers(0, n - 1))
        assert da(k, n).theta < da(k + 1, n).theta

    def test_array_matches_scalar(self):
        ks = np.array([0, 3, 50, 199, 200])
        ns = np.array([5, 10, 100, 200, 200])
        theta, v = da_transform_array(ks, ns)
        for i in range(ks.size):
            e = da(int(ks[i]), int(ns[i]))
            assert theta[i] == pytest.approx(e.theta, abs=1e-15)
            assert v[i] == e.v


class TestDaInverse:

    def test_symmetric_point(self):
        assert da_inverse(2 * da(50, 100).theta, 100) == pytest.approx(0.5, abs=1e-12)

    def test_round_trip_73_of_200(self):
        assert da_inverse(2 * da(73, 200).theta, 200) == pytest.approx(0.365, abs=1e-10)

    def test_headline_point_estimate(self):
        # mu = 1.2384 with SE 0.0331; oracle from an independent mpmath evaluation
        assert da_inverse(2 * 1.2384, 1 / 0.0331 ** 2) == pytest.approx(0.8939528836892046, abs=1e-12)

    def test_saturation(self):
        n = 50.0
        # doubled transform of k = 0 at this n_hat
        edge = math.asin(math.sqrt(1 / (n + 1)))
        assert da_inverse(0.0, n) == 0.0
        assert da_inverse(edge, n) == 0.0
        assert da_inverse(math.pi, n) == 1.0
        assert da_inverse(math.pi - edge, n) == 1.0
        assert 0.0 < da_inverse(edge * 1.5, n) < 0.05

    def test_infinite_n_hat_limit(self):
        for g in (0.0, 0.3, 1.2, math.pi / 2, 2.9, math.pi):
            assert da_inverse(g, math.inf) == pytest.approx((1 - math.cos(g)) / 2, abs=1e-15)
        assert da_inverse(1.0, 1e12) == pytest.approx(da_inverse(1.0, math.inf), abs=1e-10)

    def test_monotone_in_gamma(self):
        for n_hat in (3.0, 40.0, 912.7):
            ps = [da_inverse(g, n_hat) for g in np.linspace(0.0, math.pi, 2001)]
            assert all(b >= a for a, b in zip(ps, ps[1:]))

    @pytest.mark.parametrize("gamma,n_hat", [(-0.1, 10), (3.2, 10), (1.0, 0.0), (math.nan, 10), (1.0, -math.inf), (1.0, math.nan)])
    def test_invalid(self, gamma, n_hat):
        with pytest.raises(ValueError):
            da_inverse(gamma, n_hat)

    def test_array_matches_scalar(self, rng):
        gamma = rng.uniform(0.0, math.pi, 500)
        n_hat = rng.uniform(1.0, 3000.0, 500)
        got = da_inverse_array(gamma, n_hat)
        want = [da_inverse(g, n) for g, n in zip(gamma, n_hat)]
        assert np.allclose(got, want, rtol=0, atol=1e-13)

    @given(st.integers(10, 5000), st.data())
    @settings(max_examples=300, deadline=None)
    def test_round_trip_property(self, n, data):
        k = data.draw(st.integers(0, n))
        back = da_inverse(2 * da(k, n).theta, n)
        assert abs(back - k / n) <= max(1e-3, 2.0 / n)


class TestBacktransformCi:

    def test_headline_interval(self):
        est = backtransform_ci(1.2384, 0.0331 ** 2, 20)
        # oracle: mpmath evaluation of the inverse with scipy's t_(19) quantile
        assert est.p_bar == pytest.approx(0.893952883689204593, abs=1e-12)
        assert est.lcb == pytest.approx(0.847529465016608138, abs=1e-10)
        assert est.ucb == pytest.approx(0.932824939274169474, abs=1e-10)
        assert est.n_hat == pytest.approx(1 / 0.0331 ** 2)

    def test_zero_variance_collapses(self):
        mu = da(17, 20).theta
        est = backtransform_ci(mu, 0.0, 20, n_hat=20)
        assert est.lcb == est.p_bar == est.ucb

    def test_upper_bound_forced_to_one(self):
        est = backtransform_ci(1.5, 0.01, 20, n_hat=1.5)
        assert est.ucb == 1.0

    def test_lower_bound_forced_to_zero(self):
        est = backtransform_ci(0.2, 0.001, 20, n_hat=30)
        assert est.p_bar * 30 < 2
        assert est.lcb == 0.0

    def test_bounds_ordered_and_in_range(self, rng):
        for _ in range(200):
            mu = rng.uniform(0.05, 1.5)
            var = rng.uniform(1e-6, 0.05)
            est = backtransform_ci(mu, var, int(rng.integers(2, 50)), alpha=rng.uniform(0.01, 0.5))
            assert 0.0 <= est.lcb <= est.p_bar <= est.ucb <= 1.0

    def test_wider_at_lower_alpha(self):
        a = backtransform_ci(1.0, 0.002, 10, alpha=0.10)
        b = backtransform_ci(1.0, 0.002, 10, alpha=0.01)
        assert b.lcb < a.lcb and b.ucb > a.ucb

    @pytest.mark.parametrize("kwargs", [dict(h=1), dict(alpha=0.0), dict(alpha=1.0), dict(var_mu=-1e-3)])
    def test_invalid(self, kwargs):
        args = dict(mu=1.0, var_mu=0.001, h=10)
        args.update(kwargs)
        with pytest.raises(ValueError):
            backtransform_ci(**args)

    def test_zero_variance_needs_n_hat(self):
        with pytest.raises(ValueError):
            backtransform_ci(1.0, 0.0, 10)


class TestConfusionMatrix:

    def test_two_by_two(self):
        cm = ConfusionMatrix([[40, 10], [5, 45]])
        acc = overall_accuracy(cm)
        assert (acc.k, acc.n, acc.p) == (85, 100, 0.85)
        metrics = class_metrics(cm)
        assert metrics.recall[0] == pytest.approx(0.8)
        assert metrics.precision[0] == pytest.approx(40 / 45)
        assert metrics.f1[0] == pytest.approx(2 * 0.8 * (40 / 45) / (0.8 + 40 / 45))

    def test_identity(self):
        cm = ConfusionMatrix(np.eye(4, dtype=int) * 7)
        assert overall_accuracy(cm).p == 1.0
        metrics = class_metrics(cm)
        assert metrics.recall == (1.0,) * 4
        assert metrics.precision == (1.0,) * 4

    def test_all_off_diagonal(self):
        assert overall_accuracy(ConfusionMatrix([[0, 3], [4, 0]])).k == 0

    def test_empty_predicted_column_is_undefined(self):
        metrics = class_metrics(ConfusionMatrix([[5, 0], [3, 0]]))
        assert metrics.precision[1] is None
        assert metrics.f1[1] is None
        assert metrics.recall[1] == 0.0

    @pytest.mark.parametrize("counts", [[[1, 2, 3]], [[1]], [[1, -1], [0, 2]], [[0, 0], [0, 0]], [[1.5, 0], [0, 1]]])
    def test_invalid(self, counts):
        with pytest.raises(ValueError):
            ConfusionMatrix(counts)

    @given(st.integers(2, 6).flatmap(
        lambda q: st.lists(st.lists(st.integers(0, 50), min_size=q, max_size=q), min_size=q, max_size=q)))
    @settings(max_examples=200, deadline=None)
    def test_accuracy_is_prevalence_weighted_recall(self, counts):
        arr = np.array(counts)
        if arr.sum() == 0:
            return
        cm = ConfusionMatrix(arr)
        rec = class_metrics(cm).recall
        shares = cm.row_sums / cm.n
        weighted = sum(s * r for s, r in zip(shares, rec) if r is not None)
        assert overall_accuracy(cm).p == pytest.approx(weighted, abs=1e-12)


class TestBenchmark:

    def test_stated_values(self):
        assert benchmark_accuracy([50, 50]) == pytest.approx(0.5, abs=1e-12)
        assert benchmark_accuracy([10] * 10) == pytest.approx(0.1, abs=1e-12)
        assert benchmark_accuracy([9, 1]) == pytest.approx(0.82, abs=1e-12)

    def test_single_class_holds_all(self):
        assert benchmark_accuracy([0, 12, 0]) == 1.0

    @given(st.lists(st.integers(0, 1000), min_size=2, max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_minimized_at_uniform(self, counts):
        if sum(counts) == 0:
            return
        q = len(counts)
        p0 = benchmark_accuracy(counts)
        assert 1.0 / q - 1e-12 <= p0 <= 1.0

    def test_from_matrix_uses_observed_classes(self):
        cm = ConfusionMatrix([[40, 10], [5, 45]])
        assert benchmark_from_matrix(cm) == pytest.approx(0.5)

    @pytest.mark.parametrize("counts", [[3], [0, 0], [1, -1], [1, math.inf]])
    def test_invalid(self, counts):
        with pytest.raises(ValueError):
            benchmark_accuracy(counts)


def test_harmonic_mean_n():
    assert harmonic_mean_n([100, 100]) == 100.0
    assert harmonic_mean_n([1, 2, 4]) == pytest.approx(3 / 1.75)
    assert harmonic_mean_n([]) is None
