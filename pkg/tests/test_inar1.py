import numpy as np
import pytest
from scipy import stats

from abf.core import RngStream
from abf.models import (
    Inar1Params,
    binding_function,
    inar1_conditional_pmf,
    inar1_conditional_pmf_batch,
    inar1_simulate,
    inar1_simulate_block,
)
from abf.summaries import autocov_summary_block


def test_param_validation():
    with pytest.raises(ValueError):
        Inar1Params(1.0, 2.0)
    with pytest.raises(ValueError):
        Inar1Params(0.5, 0.0)


def test_no_thinning_gives_iid_poisson():
    n = 100_000
    y = inar1_simulate(Inar1Params(0.0, 2.0), n, RngStream(1, 0))
    se = np.sqrt(2.0 / n)
    assert abs(y.mean() - 2.0) < 3 * se


def test_longrun_mean_matches_binding_first_component():
    n = 100_000
    y = inar1_simulate(Inar1Params(0.4, 2.0), n, RngStream(2, 0))
    target = 2.0 / 0.6
    # AR(1)-style autocorrelation inflates the naive s.e. by sqrt((1+rho)/(1-rho))
    se = np.sqrt(target / n) * np.sqrt(1.4 / 0.6)
    assert abs(y.mean() - target) < 3 * se


def test_lag1_autocorrelation_matches_thinning_probability():
    n = 100_000
    y = inar1_simulate(Inar1Params(0.4, 2.0), n, RngStream(3, 0)).astype(float)
    z = y - y.mean()
    r1 = (z[1:] * z[:-1]).mean() / z.var()
    assert abs(r1 - 0.4) < 3.0 / np.sqrt(n) * 3  # wide band for serial dependence


class TestConditionalPmf:
    def test_mass_at_zero_hand_value(self):
        pmf = inar1_conditional_pmf(Inar1Params(0.5, 1.0), y_last=2)
        assert pmf[0] == pytest.approx(0.25 * np.exp(-1.0), rel=1e-12)

    def test_no_thinning_reduces_to_poisson(self):
        pmf = inar1_conditional_pmf(Inar1Params(0.0, 1.7), y_last=5)
        expected = stats.poisson.pmf(np.arange(len(pmf)), 1.7)
        assert np.allclose(pmf, expected, atol=1e-14)

    def test_zero_last_count_reduces_to_poisson(self):
        pmf = inar1_conditional_pmf(Inar1Params(0.6, 1.7), y_last=0)
        expected = stats.poisson.pmf(np.arange(len(pmf)), 1.7)
        assert np.allclose(pmf, expected, atol=1e-14)

    def test_sums_to_one_within_tail_tolerance(self):
        for rho, lam, y_last in [(0.5, 1.0, 2), (0.9, 9.5, 14), (0.05, 0.3, 0)]:
            pmf = inar1_conditional_pmf(Inar1Params(rho, lam), y_last)
            assert 1.0 - pmf.sum() < 1e-10
            assert pmf.sum() <= 1.0 + 1e-12

    def test_monte_carlo_transition_frequencies(self):
        # 10^6 simulated transitions from a fixed state, 3 s.e. per cell
        params = Inar1Params(0.5, 1.0)
        y_last = 2
        n = 1_000_000
        gen = RngStream(77, 0).generator()
        draws = gen.binomial(y_last, params.rho, n) + gen.poisson(params.lam, n)
        pmf = inar1_conditional_pmf(params, y_last)
        for k in range(10):
            p_hat = np.mean(draws == k)
            se = np.sqrt(pmf[k] * (1 - pmf[k]) / n)
            assert abs(p_hat - pmf[k]) < 3 * se + 1e-12, f"cell {k}"

    def test_batch_matches_scalar(self):
        rhos = np.array([0.2, 0.5, 0.8])
        lams = np.array([1.0, 2.0, 0.5])
        batch = inar1_conditional_pmf_batch(rhos, lams, y_last=3, k_max=25)
        for i in range(3):
            single = inar1_conditional_pmf(Inar1Params(rhos[i], lams[i]), 3, support_max=25)
            assert np.allclose(batch[i], single[:26], atol=1e-14)


def test_binding_function_at_reference_point():
    b = binding_function("inar1", (0.4, 2.0))
    assert np.allclose(b, [2.0 / 0.6, 0.4, 0.16, 0.064])


def test_summaries_converge_to_binding():
    """Max gap between (mean, acf) summaries and the binding function is
    nonincreasing in T on average over 20 seeds."""
    params = Inar1Params(0.4, 2.0)
    target = binding_function("inar1", params)
    thetas = np.tile(params.to_array(), (20, 1))
    gaps = []
    for T in (1000, 10_000, 100_000):
        block = inar1_simulate_block(thetas, T, RngStream(11, T).generator()).astype(float)
        etas = autocov_summary_block(block, 3, "inar")
        gaps.append(np.abs(etas - target).max(axis=1).mean())
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < 0.05


def test_simulate_block_matches_marginals():
    thetas = np.array([[0.0, 3.0], [0.5, 1.0]])
    block = inar1_simulate_block(thetas, 50_000, RngStream(21).generator())
    assert abs(block[0].mean() - 3.0) < 0.1
    assert abs(block[1].mean() - 2.0) < 0.1
    assert block.dtype == np.int64 and block.min() >= 0
