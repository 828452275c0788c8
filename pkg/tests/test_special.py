import math

import numpy as np
import pytest
from scipy import stats

from mlmeta.special import (betainc, chisq_cdf, chisq_sf, gammainc_lower, gammainc_upper, ln_beta,
                            ln_gamma, t_cdf, t_pdf, t_quantile)


class TestLnGamma:

    def test_known_points(self):
        assert ln_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert ln_gamma(2.0) == pytest.approx(0.0, abs=1e-14)
        assert ln_gamma(0.5) == pytest.approx(0.572364942924700087, abs=1e-12)
        # log(9!) from a 30-digit mpmath evaluation
        assert ln_gamma(10.0) == pytest.approx(12.8018274800814696, abs=1e-11)

    @pytest.mark.parametrize("x", [1e-3, 0.3, 1.7, 4.5, 25.0, 171.3, 1e4])
    def test_against_scipy(self, x):
        from scipy.special import gammaln
        assert ln_gamma(x) == pytest.approx(gammaln(x), rel=1e-12, abs=1e-12)

    def test_ln_beta_identity(self):
        assert ln_beta(2.0, 3.0) == pytest.approx(math.log(1.0 / 12.0), abs=1e-13)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            ln_gamma(0.0)


class TestIncompleteFunctions:

    def test_gamma_mpmath_values(self):
        assert gammainc_lower(3.2, 2.1) == pytest.approx(0.304729675059414583, abs=1e-12)
        assert gammainc_upper(3.2, 2.1) == pytest.approx(0.695270324940585417, abs=1e-12)

    def test_beta_mpmath_value(self):
        assert betainc(2.5, 3.5, 0.3) == pytest.approx(0.296752989295666378, abs=1e-12)

    @pytest.mark.parametrize("a,x", [(0.5, 0.01), (1.0, 1.0), (7.5, 3.0), (7.5, 12.0), (60.0, 55.0)])
    def test_gamma_complement(self, a, x):
        assert gammainc_lower(a, x) + gammainc_upper(a, x) == pytest.approx(1.0, abs=1e-13)

    @pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.2), (3.0, 9.5, 0.4), (40.0, 2.0, 0.97), (9.5, 0.5, 0.5)])
    def test_beta_against_scipy(self, a, b, x):
        from scipy.special import betainc as sp_betainc
        assert betainc(a, b, x) == pytest.approx(sp_betainc(a, b, x), abs=1e-12)

    def test_beta_endpoints(self):
        assert betainc(2.0, 3.0, 0.0) == 0.0
        assert betainc(2.0, 3.0, 1.0) == 1.0


class TestChiSquare:

    def test_zero_statistic(self):
        for df in (1, 2, 85):
            assert chisq_sf(0.0, df) == 1.0

    def test_classic_critical_value(self):
        assert chisq_sf(3.84146, 1) == pytest.approx(0.0499999648337474, abs=1e-10)

    def test_huge_q_is_tiny(self):
        assert chisq_sf(1.2e7, 85) < 1e-4

    def test_cdf_plus_sf(self):
        for df in (1, 3, 10, 84, 85):
            for q in np.linspace(0.0, 3.0 * df + 10, 25):
                assert chisq_cdf(q, df) + chisq_sf(q, df) == pytest.approx(1.0, abs=1e-12)

    def test_non_increasing(self):
        for df in (1, 4, 85):
            vals = [chisq_sf(q, df) for q in np.linspace(0.0, 200.0, 400)]
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("df", [1, 2, 5, 30, 85])
    def test_against_scipy(self, df):
        for q in (0.1, 1.0, df * 0.8, df * 1.5, df * 3.0):
            assert chisq_sf(q, df) == pytest.approx(stats.chi2.sf(q, df), rel=1e-9, abs=1e-14)

    @pytest.mark.parametrize("df", [0, -1, 2.5])
    def test_bad_df(self, df):
        with pytest.raises(ValueError):
            chisq_sf(1.0, df)

    def test_negative_q(self):
        with pytest.raises(ValueError):
            chisq_sf(-0.1, 3)


class TestStudentT:

    def test_median(self):
        for df in (1, 2.5, 19, 1e6):
            assert t_quantile(0.5, df) == 0.0

    def test_cauchy_closed_form(self):
        assert t_quantile(0.975, 1) == pytest.approx(math.tan(math.pi * 0.475), rel=1e-10)

    def test_df19(self):
        assert t_quantile(0.975, 19) == pytest.approx(2.09302405440830932, abs=1e-9)

    def test_exact_symmetry(self):
        # dyadic p, so that 1 - (1 - p) == p holds in floating point
        for df in (1, 3.5, 19, 200):
            for p in (2.0 ** -10, 0.0625, 0.125, 0.25, 0.375):
                assert t_quantile(1.0 - p, df) == -t_quantile(p, df)

    def test_symmetry_up_to_input_rounding(self):
        for df in (1, 3.5, 19, 200):
            for p in (0.001, 0.025, 0.2, 0.4):
                assert t_quantile(1.0 - p, df) == pytest.approx(-t_quantile(p, df), rel=1e-11)

    def test_normal_limit(self):
        from statistics import NormalDist
        for p in (0.9, 0.975, 0.995):
            assert t_quantile(p, 1e6) == pytest.approx(NormalDist().inv_cdf(p), abs=1e-5)

    def test_round_trip_grid(self):
        for df in (1, 2, 4.5, 10, 19, 85, 1000):
            for p in (1e-6, 0.001, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999, 1 - 1e-6):
                assert t_cdf(t_quantile(p, df), df) == pytest.approx(p, abs=1e-8)

    @pytest.mark.parametrize("df", [1, 3, 19, 199])
    def test_against_scipy(self, df):
        for p in (0.005, 0.05, 0.75, 0.975):
            assert t_quantile(p, df) == pytest.approx(stats.t.ppf(p, df), rel=1e-8)
        for t in (-4.0, -0.5, 0.0, 1.3, 6.0):
            assert t_cdf(t, df) == pytest.approx(stats.t.cdf(t, df), abs=1e-12)
            assert t_pdf(t, df) == pytest.approx(stats.t.pdf(t, df), rel=1e-10)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ValueError):
            t_quantile(p, 5)

    def test_bad_df(self):
        with pytest.raises(ValueError):
            t_quantile(0.9, 0.0)
