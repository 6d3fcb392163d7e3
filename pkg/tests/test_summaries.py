import numpy as np
import pytest
from scipy import stats

from abf.core import RngStream
from abf.errors import DegenerateRegressionError, InsufficientDataError
from abf.models import SvParams, jumpdiff_simulate, sv_simulate
from abf.summaries import (
    AUX_PARAM_NAMES,
    SummarySpec,
    autocov_summary,
    autocov_summary_block,
    aux_fitted_sigma2,
    aux_loglikelihood,
    aux_score,
    build_summary,
    build_summary_block,
    fit_aux_qmle,
    supplementary_stats,
)


def _garch_n_simulate(omega, a, b, n, rng):
    gen = rng.generator()
    eps = gen.standard_normal(n)
    r = np.empty(n)
    s2 = omega / (1 - a - b)
    for t in range(n):
        if t > 0:
            s2 = omega + a * r[t - 1] ** 2 + b * s2
        r[t] = np.sqrt(s2) * eps[t]
    return r


class TestAutocov:
    def test_constant_series_inar_variant(self):
        out = autocov_summary(np.full(50, 3.0), 3, "inar")
        assert out[0] == 3.0
        assert np.all(out[1:] == 0.0)

    def test_lag0_is_variance_or_mean_square(self):
        y = RngStream(1).generator().normal(2.0, 1.0, 500)
        centered = autocov_summary(y, 2, "centered")
        uncentered = autocov_summary(y, 2, "uncentered")
        assert centered[0] == pytest.approx(y.var())
        assert uncentered[0] == pytest.approx((y**2).mean())

    def test_series_too_short(self):
        with pytest.raises(InsufficientDataError):
            autocov_summary(np.arange(3.0), 3)


class TestAuxLoglik:
    def test_garch_n_constant_variance_limit(self):
        r = RngStream(2).generator().standard_normal(300)
        omega = 0.8
        ll = aux_loglikelihood("garch_n", [omega, 0.0, 0.0], r)
        ll_iid = stats.norm.logpdf(r, scale=np.sqrt(omega)).sum()
        # recursions start at the sample mean square, so only the first
        # observation differs from the iid value
        first_fix = stats.norm.logpdf(r[0], scale=np.sqrt((r**2).mean())) - stats.norm.logpdf(
            r[0], scale=np.sqrt(omega)
        )
        assert ll == pytest.approx(ll_iid + first_fix, abs=1e-10)

    def test_garch_t_large_nu_approaches_gaussian(self):
        r = RngStream(3).generator().standard_normal(400)
        beta_n = [0.05, 0.1, 0.85]
        ll_n = aux_loglikelihood("garch_n", beta_n, r)
        ll_t = aux_loglikelihood("garch_t", beta_n + [500.0], r)
        assert abs(ll_t - ll_n) / len(r) < 1e-2

    def test_tarch_nests_garch(self):
        r = RngStream(4).generator().standard_normal(400)
        ll_g = aux_loglikelihood("garch_t", [0.05, 0.1, 0.8, 8.0], r)
        ll_t = aux_loglikelihood("tarch_t", [0.05, 0.1, 0.0, 0.8, 8.0], r)
        assert ll_t == pytest.approx(ll_g, abs=1e-12)

    def test_invalid_params_rejected(self):
        from abf.errors import InvalidAuxParameterError

        r = np.ones(200)
        with pytest.raises(InvalidAuxParameterError):
            aux_loglikelihood("garch_n", [0.1, 0.6, 0.6], r)


class TestQmle:
    def test_self_consistency_on_garch_data(self):
        truth = np.array([0.05, 0.10, 0.85])
        r = _garch_n_simulate(*truth, 100_000, RngStream(5))
        fit = fit_aux_qmle("garch_n", r, rng=RngStream(6))
        assert fit.converged
        rel = np.abs(fit.beta_hat.values - truth) / truth
        assert np.all(rel < 0.10)

    def test_deterministic_given_seed(self):
        r = _garch_n_simulate(0.1, 0.05, 0.9, 2000, RngStream(7))
        f1 = fit_aux_qmle("garch_n", r, rng=RngStream(8))
        f2 = fit_aux_qmle("garch_n", r, rng=RngStream(8))
        assert np.array_equal(f1.beta_hat.values, f2.beta_hat.values)

    def test_iid_data_gives_no_arch(self):
        r = RngStream(9).generator().standard_normal(50_000)
        fit = fit_aux_qmle("garch_n", r, rng=RngStream(10))
        assert abs(fit.beta_hat.values[1]) < 0.02

    def test_needs_100_observations(self):
        with pytest.raises(InsufficientDataError):
            fit_aux_qmle("garch_n", np.ones(50))


class TestScore:
    def test_score_vanishes_at_own_qmle(self):
        y, _ = sv_simulate(SvParams(0.9, 0.1), 600, RngStream(11))
        for aux in ("garch_n", "garch_t", "egarch_t"):
            fit = fit_aux_qmle(aux, y, rng=RngStream(12))
            s = aux_score(aux, fit.beta_hat.values, y)
            assert np.max(np.abs(s)) < 1e-3, aux

    def test_finite_difference_matches_analytic_garch_n(self):
        r = _garch_n_simulate(0.05, 0.1, 0.85, 2000, RngStream(13))
        beta = np.array([0.06, 0.12, 0.80])
        s_fd = aux_score("garch_n", beta, r)
        s_an = _garch_n_analytic_score(beta, r)
        assert np.max(np.abs(s_fd - s_an)) < 1e-5

    def test_score_of_simulated_data_centered_at_pseudotruth(self):
        # estimating equation: the mean auxiliary score over simulations,
        # evaluated at the pseudo-true point, is zero.  The pseudo-true point
        # is estimated from one very long simulated sample.
        y_long, _ = sv_simulate(SvParams(0.9, 0.1), 100_000, RngStream(14))
        fit = fit_aux_qmle("garch_n", y_long, rng=RngStream(15))
        from abf.models import sv_simulate_block
        from abf.summaries import aux_score_block

        thetas = np.tile([0.9, 0.1], (400, 1))
        sims = sv_simulate_block(thetas, 2000, RngStream(16).generator())
        scores = aux_score_block("garch_n", fit.beta_hat.values, sims)
        mean_score = scores.mean(axis=0)
        se = scores.std(axis=0) / np.sqrt(len(scores))
        # allow for the O(T_long^{-1/2}) error in the pseudo-true estimate
        assert np.all(np.abs(mean_score) < 5 * se + 0.01)


def _garch_n_analytic_score(beta, r):
    omega, a, b = beta
    n = len(r)
    s2 = np.empty(n)
    s2[0] = (r**2).mean()
    for t in range(1, n):
        s2[t] = omega + a * r[t - 1] ** 2 + b * s2[t - 1]
    dw = np.zeros(n)
    da = np.zeros(n)
    db = np.zeros(n)
    for t in range(1, n):
        dw[t] = 1.0 + b * dw[t - 1]
        da[t] = r[t - 1] ** 2 + b * da[t - 1]
        db[t] = s2[t - 1] + b * db[t - 1]
    core = 0.5 * (r**2 / s2**2 - 1.0 / s2)
    return np.array([(core * g).sum() / n for g in (dw, da, db)])


class TestSupplementary:
    def _inputs(self, seed=17, n=800):
        gen = RngStream(seed).generator()
        r = gen.standard_normal(n)
        lnbv = gen.normal(-0.5, 0.8, n)
        jv = np.where(gen.random(n) < 0.1, gen.gamma(2.0, 0.3, n), 0.0)
        s2 = np.exp(gen.normal(0.0, 0.5, n))
        return r, lnbv, jv, s2

    def test_symmetric_returns_center_signed_jump_stat(self):
        r, lnbv, jv, s2 = self._inputs()
        out = supplementary_stats(r, lnbv, jv, s2)
        se = np.std(np.sign(r) * np.sqrt(jv)) / np.sqrt(len(r))
        assert abs(out[0]) < 4 * se

    def test_iid_jv_has_no_lag1_correlation(self):
        r, lnbv, jv, s2 = self._inputs(18, 20_000)
        out = supplementary_stats(r, lnbv, jv, s2)
        assert abs(out[2]) < 3.0 / np.sqrt(len(jv))

    def test_exact_linear_regression_recovered(self):
        r, _, jv, s2 = self._inputs()
        lnbv = 0.7 + 1.3 * np.log(s2)
        out = supplementary_stats(r, lnbv, jv, s2)
        assert out[5] == pytest.approx(0.7, abs=1e-10)
        assert out[6] == pytest.approx(1.3, abs=1e-10)
        assert out[7] == pytest.approx(0.0, abs=1e-8)

    def test_zero_variance_regressor_raises(self):
        r, lnbv, jv, _ = self._inputs()
        with pytest.raises(DegenerateRegressionError):
            supplementary_stats(r, lnbv, jv, np.ones_like(r))

    def test_jump_free_sample_gets_zero_correlation(self):
        r, lnbv, _, s2 = self._inputs()
        out = supplementary_stats(r, lnbv, np.zeros_like(r), s2)
        assert out[1] == 0.0 and out[2] == 0.0


@pytest.fixture(scope="module")
def jd_data():
    from abf.experiments import JUMPDIFF_SYNTHETIC_TRUTH

    return jumpdiff_simulate(JUMPDIFF_SYNTHETIC_TRUTH, 600, 78, RngStream(19))


class TestBuildSummary:

    @pytest.mark.parametrize(
        "aux,expected",
        [("garch_n", 11), ("garch_t", 12), ("tarch_t", 13), ("rgarch", 12)],
    )
    def test_empirical_spec_dimensions(self, jd_data, aux, expected):
        spec = SummarySpec(kind="aux_score_plus_supplementary", aux_model=aux)
        assert spec.dimension == expected
        fit = fit_aux_qmle(aux, (jd_data.returns, jd_data.lnbv), rng=RngStream(20))
        eta = build_summary(spec, jd_data, fit)
        assert eta.shape == (expected,)
        assert np.all(np.isfinite(eta))

    def test_inar_spec_dimension(self):
        spec = SummarySpec(kind="autocov", max_lag=3, variant="inar")
        assert spec.dimension == 4

    def test_score_spec_requires_fit(self):
        spec = SummarySpec(kind="aux_score", aux_model="garch_n")
        with pytest.raises(ValueError):
            build_summary(spec, np.ones(200))

    def test_summaries_finite_under_prior_draws(self, jd_data):
        """Every spec yields finite summaries across many prior draws."""
        from abf.experiments import JUMPDIFF_PRIOR, jumpdiff_constraint
        from abf.models import jumpdiff_simulate_block

        gen = RngStream(21).generator()
        thetas = JUMPDIFF_PRIOR.sample(gen, 2500)
        thetas = thetas[jumpdiff_constraint(thetas)][:1000]
        block = jumpdiff_simulate_block(thetas, 300, RngStream(22).generator())

        class _Data:
            returns = block["r"]
            lnbv = block["lnbv"]
            jv = block["jv"]

        for aux in ("garch_n", "garch_t", "tarch_t", "rgarch"):
            spec = SummarySpec(kind="aux_score_plus_supplementary", aux_model=aux)
            fit = fit_aux_qmle(aux, (jd_data.returns, jd_data.lnbv), rng=RngStream(23))
            etas = build_summary_block(spec, _Data(), fit)
            assert etas.shape == (1000, spec.dimension)
            assert np.isfinite(etas).all(), aux
