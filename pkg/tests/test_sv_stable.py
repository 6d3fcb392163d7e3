import numpy as np
import pytest
from scipy import stats

from _oracles import stable_cdf_gil_pelaez
from abf.core import RngStream
from abf.models import SvParams, alpha_stable_draw, stable_standard, sv_simulate, sv_simulate_block


class TestSv:
    def test_stationary_logvariance_moments(self):
        params = SvParams(0.9, 0.1)
        n = 200_000
        _, lat = sv_simulate(params, n, RngStream(1))
        lnv = np.log(lat.values)
        target = params.stationary_var
        # 3 s.e. with an AR(1) inflation factor for the variance estimate
        se = target * np.sqrt(2.0 / n) * np.sqrt((1 + 0.81) / (1 - 0.81))
        assert abs(lnv.var() - target) < 3 * se
        assert abs(lnv.mean()) < 0.05

    def test_returns_are_leptokurtic(self):
        params = SvParams(0.9, 0.1)
        y, _ = sv_simulate(params, 200_000, RngStream(2))
        kurt = stats.kurtosis(y, fisher=False)
        assert kurt > 3.5  # infinite-T value is 3 exp(var(ln V)) ~= 5.08

    def test_small_volofvol_keeps_variance_near_one(self):
        params = SvParams(0.5, 0.0501)
        _, lat = sv_simulate(params, 5000, RngStream(3))
        lnv = np.log(lat.values)
        stat_sd = np.sqrt(params.stationary_var)
        assert np.abs(lnv).max() < 6 * stat_sd
        assert abs(np.median(lat.values) - 1.0) < 0.1

    def test_block_simulator_matches_marginal_variance(self):
        thetas = np.tile([0.9, 0.1], (2000, 1))
        block = sv_simulate_block(thetas, 100, RngStream(4).generator())
        # E[y^2] = E[V] = exp(stationary_var / 2)
        target = np.exp(0.1 / (1 - 0.81) / 2.0)
        assert abs((block**2).mean() - target) < 0.05


class TestStable:
    def test_alpha2_is_gaussian_with_variance_two(self):
        x = alpha_stable_draw(2.0, -1.0, RngStream(5), size=1_000_000)
        n = len(x)
        assert abs(x.var() - 2.0) < 3 * 2.0 * np.sqrt(2.0 / n)
        assert abs(stats.skew(x)) < 3 * np.sqrt(6.0 / n)

    def test_alpha2_kolmogorov_smirnov(self):
        x = alpha_stable_draw(2.0, -1.0, RngStream(6), size=100_000)
        stat, pvalue = stats.kstest(x, stats.norm(scale=np.sqrt(2.0)).cdf)
        assert pvalue > 0.001

    def test_cdf_matches_characteristic_function_inversion(self):
        alpha = 1.7
        x = alpha_stable_draw(alpha, -1.0, RngStream(7), size=100_000)
        for q in (-2.0, -0.5, 0.0, 0.5, 2.0):
            emp = np.mean(x <= q)
            oracle = stable_cdf_gil_pelaez(q, alpha, -1.0)
            assert abs(emp - oracle) < 0.01, f"quantile {q}"

    def test_determinism(self):
        a = alpha_stable_draw(1.8, -1.0, RngStream(8, 2), size=50)
        b = alpha_stable_draw(1.8, -1.0, RngStream(8, 2), size=50)
        assert np.array_equal(a, b)

    def test_generator_and_stream_paths_agree(self):
        gen = RngStream(9).generator()
        a = stable_standard(1.9, -1.0, 10, gen)
        b = alpha_stable_draw(1.9, -1.0, RngStream(9), size=10)
        assert np.array_equal(a, b)

    def test_alpha_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            alpha_stable_draw(1.0, -1.0, RngStream(0), size=2)
