"""Experiment drivers: the simulation studies and the empirical pipeline.

Each driver is deterministic given its seed: every Monte Carlo consumer
(observed-data simulation, reference-table block, sampler chain, predictive
draw pool) takes a dedicated sub-stream derived from the seed and its own
index, never from execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .abc import (
    AbcDrawSet,
    build_reference_table,
    nearest_neighbor_select,
    tolerance_schedule,
)
from .core import PriorBox, RngStream
from .data import MarketDataBundle
from .errors import ConfigError
from .evaluation import (
    ScoreReport,
    _subtable,
    crps,
    default_resolution_rule,
    expanding_window_eval,
    log_score,
    merging_experiment,
    merging_metrics,
    quadratic_score,
)
from .exact import (
    exact_predictive_continuous,
    exact_predictive_discrete,
    inar1_cond_pmf_batch,
    inar1_grid_posterior,
    ma2_cond_law,
    ma2_grid_posterior,
)
from .filtering import JumpDiffSSM, SvSSM, pmmh_sample
from .models import (
    Inar1Params,
    JumpDiffParams,
    Ma2Params,
    SvParams,
    inar1_simulate,
    inar1_simulate_block,
    jumpdiff_simulate,
    jumpdiff_simulate_block,
    ma2_simulate,
    ma2_simulate_block,
    sv_simulate,
    sv_simulate_block,
)
from .predictive import (
    abf_predictive_continuous,
    abf_predictive_discrete,
    abf_predictive_state_space,
)
from .summaries import (
    SummarySpec,
    autocov_summary_block,
    build_summary,
    build_summary_block,
    fit_aux_qmle,
)

INAR_PRIOR = PriorBox([0.0, 0.0], [1.0, 10.0], ("rho", "lambda"))
MA2_PRIOR = PriorBox([0.0, 0.0, 0.1], [0.99, 0.99, 3.0], ("theta1", "theta2", "sigma"))
SV_PRIOR = PriorBox([0.5, 0.05], [0.99, 0.5], ("theta1", "theta2"))
JUMPDIFF_PRIOR = PriorBox(
    [-0.5, 0.5, 0.001, -1.0, 0.5, 0.001, 1.5, 0.001, 0.5, 0.001, -1.0, 0.5],
    [0.5, 1.5, 1.0, 1.0, 0.99, 0.3, 2.0, 0.3, 0.99, 0.2, 1.0, 3.0],
    JumpDiffParams.names,
)

# marginal posterior means from the published empirical study; used as the
# generating truth for the synthetic end-to-end pipeline
JUMPDIFF_SYNTHETIC_TRUTH = JumpDiffParams(
    psi0=-0.02, psi1=1.26, sigma_bv=0.45, omega=-0.04, rho=0.94, sigma_h=0.20,
    alpha=1.76, d0=0.11, beta=0.69, gamma=0.12, mu=0.07, sigma_z=1.21,
)


def jumpdiff_constraint(thetas: np.ndarray) -> np.ndarray:
    """Stationarity of the self-exciting intensity: beta + gamma < 1."""
    thetas = np.atleast_2d(thetas)
    return thetas[:, 8] + thetas[:, 9] < 1.0


# --------------------------------------------------------------------------
# count-series study (discrete predictive, exact grid reference)
# --------------------------------------------------------------------------

def run_inar_table1(
    seed: int,
    theta0=(0.4, 2.0),
    start_T: int = 100,
    K: int = 100,
    alpha: float = 0.01,
    n_draws: int = 20000,
    resolution: Sequence[int] = (100, 100),
    prior: PriorBox = INAR_PRIOR,
) -> dict:
    """Expanding-window score comparison of the ABF and exact predictives."""
    params = Inar1Params(*theta0)
    y = inar1_simulate(params, start_T + K, RngStream(seed, 0))
    yf = y.astype(float)

    def forecaster_abf(prefix):
        t = len(prefix)
        table = build_reference_table(
            prior,
            lambda th, g, _t=t: inar1_simulate_block(th, _t, g),
            lambda d: autocov_summary_block(d, 3, "inar"),
            n_draws,
            RngStream(seed, 1, (t,)),
            spec_label="inar_mean_acf3",
        )
        eta = autocov_summary_block(prefix[None, :], 3, "inar")[0]
        ds = nearest_neighbor_select(table, eta, alpha)
        return abf_predictive_discrete(ds, inar1_cond_pmf_batch, int(prefix[-1]), t)

    def forecaster_exact(prefix):
        post = inar1_grid_posterior(prefix.astype(np.int64), prior, resolution)
        return exact_predictive_discrete(post, inar1_cond_pmf_batch, int(prefix[-1]), len(prefix))

    return {
        "abf": expanding_window_eval(yf, forecaster_abf, start_T, K, label="abf"),
        "exact": expanding_window_eval(yf, forecaster_exact, start_T, K, label="exact"),
        "data": y,
    }


# --------------------------------------------------------------------------
# moving-average study (continuous predictive, grid reference, many summaries)
# --------------------------------------------------------------------------

def run_ma2_table2(
    seed: int,
    theta0=(0.8, 0.6, 1.0),
    start_T: int = 500,
    K: int = 100,
    lags: Sequence[int] = (1, 2, 3, 4),
    prior: PriorBox = MA2_PRIOR,
    resolution_rule=default_resolution_rule,
    n_exact_draws: int = 20000,
    m_per_draw: int = 1,
) -> dict:
    """Expanding-window scores for the exact predictive and one ABF predictive
    per autocovariance lag choice; all lag choices share one reference table
    per window."""
    params = Ma2Params(*theta0)
    y = ma2_simulate(params, start_T + K, RngStream(seed, 0))
    max_lag = max(lags)
    labels = [f"abf_l{l}" for l in lags] + ["exact"]
    scores = {lab: {"ls": [], "qs": [], "crps": []} for lab in labels}

    for k in range(K):
        t = start_T + k
        prefix = y[:t]
        y_next = y[t]
        alpha, n_draws = tolerance_schedule(t)
        n_keep = int(round(alpha * n_draws))
        table = build_reference_table(
            prior,
            lambda th, g, _t=t: ma2_simulate_block(th, _t, g),
            lambda d: autocov_summary_block(d, max_lag, "uncentered"),
            n_draws,
            RngStream(seed, 1, (t,)),
            spec_label=f"ma2_autocov_l{max_lag}",
        )
        eta_obs = autocov_summary_block(prefix[None, :], max_lag, "uncentered")[0]
        preds = {}
        for l in lags:
            ds = nearest_neighbor_select(_subtable(table, l + 1), eta_obs[: l + 1], n_keep=n_keep)
            preds[f"abf_l{l}"] = abf_predictive_continuous(
                ds, ma2_cond_law, prefix, RngStream(seed, 2, (t, l)).generator(), m_per_draw=m_per_draw
            )
        res = resolution_rule(t)
        post = ma2_grid_posterior(prefix, prior, (res, res, res))
        preds["exact"] = exact_predictive_continuous(post, prefix, n_exact_draws, RngStream(seed, 3, (t,)))
        for lab, pred in preds.items():
            scores[lab]["ls"].append(log_score(pred, y_next))
            scores[lab]["qs"].append(quadratic_score(pred, y_next))
            scores[lab]["crps"].append(crps(pred, y_next))

    reports = {}
    for lab in labels:
        reports[lab] = ScoreReport(
            steps=np.arange(start_T, start_T + K),
            ls=np.array(scores[lab]["ls"]),
            qs=np.array(scores[lab]["qs"]),
            crps=np.array(scores[lab]["crps"]),
            start_T=start_T, n_steps=K,
            provenance="exact" if lab == "exact" else "abf",
            label=lab,
        )
    reports["data"] = y
    return reports


def run_merging_fig2(
    seed: int,
    theta0=(0.8, 0.6, 1.0),
    T_list: Sequence[int] = (500, 2000, 4000),
    replications: int = 20,
    lags: Sequence[int] = (1, 2, 3, 4),
    m_per_draw: int = 20,
) -> dict:
    return merging_experiment(
        Ma2Params(*theta0), lags, T_list, replications, seed, prior=MA2_PRIOR,
        m_per_draw=m_per_draw,
    )


# --------------------------------------------------------------------------
# stochastic volatility study (particle filter vs forward simulation)
# --------------------------------------------------------------------------

def _sv_table(seed: int, y: np.ndarray, aux_model: str, n_draws: int, fit):
    spec = SummarySpec(kind="aux_score", aux_model=aux_model)
    t = len(y)
    return build_reference_table(
        SV_PRIOR,
        lambda th, g, _t=t: sv_simulate_block(th, _t, g),
        lambda d: build_summary_block(spec, d, fit),
        n_draws,
        RngStream(seed, 11, (_aux_id(aux_model),)),
        spec_label=f"sv_{aux_model}_score",
    )


def run_sv_section4(
    seed: int,
    theta0=(0.9, 0.1),
    T: int = 500,
    alpha: float = 0.01,
    n_draws: int = 50000,
    aux_models: Sequence[str] = ("garch_n", "garch_t", "egarch_t"),
    n_particles: int = 2000,
    m_per_draw: int = 20,
    pmmh_iter: int = 12000,
    pmmh_particles: int = 500,
) -> dict:
    """Exact (pseudo-marginal MCMC) vs ABF predictives, with and without the
    particle-filtering step, under several auxiliary-model summary choices."""
    params = SvParams(*theta0)
    y, _ = sv_simulate(params, T, RngStream(seed, 0))

    exact_draws, pmmh_info = pmmh_sample(
        SvSSM, SV_PRIOR, y, n_iter=pmmh_iter, n_particles=pmmh_particles,
        proposal_sd=np.array([0.02, 0.02]), rng=RngStream(seed, 1), n_keep=500,
    )
    exact_pred = abf_predictive_state_space(
        _as_drawset(exact_draws), SvSSM, y, "particle_filter", n_particles,
        RngStream(seed, 2).generator(), m_per_draw=m_per_draw, provenance="exact",
    )

    abf_preds = {}
    draw_sets = {}
    for aux in aux_models:
        fit = fit_aux_qmle(aux, y, rng=RngStream(seed, 10, (_aux_id(aux),)))
        table = _sv_table(seed, y, aux, n_draws, fit)
        eta_obs = build_summary(SummarySpec(kind="aux_score", aux_model=aux), y[None, :], fit)
        ds = nearest_neighbor_select(table, eta_obs, alpha)
        draw_sets[aux] = ds
        abf_preds[aux] = abf_predictive_state_space(
            ds, SvSSM, y, "particle_filter", n_particles,
            RngStream(seed, 3, (_aux_id(aux),)).generator(), m_per_draw=m_per_draw,
        )
    fs_pred = abf_predictive_state_space(
        draw_sets[aux_models[0]], SvSSM, y, "forward_simulation", n_particles,
        RngStream(seed, 4).generator(), m_per_draw=m_per_draw,
    )

    tv_pf = merging_metrics(exact_pred, abf_preds[aux_models[0]]).tv
    tv_fs = merging_metrics(exact_pred, fs_pred).tv
    pairwise = {}
    for i, a in enumerate(aux_models):
        for b in aux_models[i + 1 :]:
            pairwise[f"{a}|{b}"] = merging_metrics(abf_preds[a], abf_preds[b]).tv
    return {
        "data": y,
        "exact_pred": exact_pred,
        "abf_preds": abf_preds,
        "fs_pred": fs_pred,
        "tv_pf": tv_pf,
        "tv_fs": tv_fs,
        "pairwise_tv": pairwise,
        "pmmh_info": pmmh_info,
        "exact_draws": exact_draws,
    }


def _aux_id(aux_model: str) -> int:
    return ("garch_n", "garch_t", "tarch_t", "egarch_t", "rgarch").index(aux_model)


def _as_drawset(thetas: np.ndarray) -> AbcDrawSet:
    thetas = np.atleast_2d(thetas)
    return AbcDrawSet(
        draws=thetas, distances=np.zeros(len(thetas)), alpha_used=1.0, epsilon_effective=0.0,
    )


# --------------------------------------------------------------------------
# empirical return/volatility pipeline
# --------------------------------------------------------------------------

EMPIRICAL_SPECS = (
    SummarySpec(kind="aux_score_plus_supplementary", aux_model="garch_n"),
    SummarySpec(kind="aux_score_plus_supplementary", aux_model="garch_t"),
    SummarySpec(kind="aux_score_plus_supplementary", aux_model="tarch_t"),
    SummarySpec(kind="aux_score_plus_supplementary", aux_model="rgarch"),
)


class _JdBlock:
    """Simulated block exposing the fields the summary builders expect."""

    def __init__(self, block: dict):
        self.returns = block["r"]
        self.lnbv = block["lnbv"]
        self.jv = block["jv"]


@dataclass(frozen=True)
class EmpiricalSpecResult:
    spec_label: str
    posterior_draws: np.ndarray  # first-window retained draws
    mpm: np.ndarray
    hpd: np.ndarray  # (k, 2)
    scores_r: tuple  # (LS, QS, CRPS) averages for the return
    scores_lnbv: tuple
    per_window: dict  # arrays per variable/score
    n_resimulated: int


def run_jumpdiff_empirical(
    bundle: MarketDataBundle,
    seed: int,
    holdout: int = 250,
    specs: Sequence[SummarySpec] = EMPIRICAL_SPECS,
    n_draws: Optional[int] = None,
    alpha: Optional[float] = None,
    use_schedule: bool = False,
    n_particles: int = 500,
    m_per_draw: int = 10,
    n_pred_draws: Optional[int] = None,
    freeze_posterior: bool = False,
    studentize: bool = True,
    prior: PriorBox = JUMPDIFF_PRIOR,
) -> dict:
    """Expanding-window out-of-sample scoring of the bivariate predictive
    under each summary spec, plus first-window posterior summaries.

    ABC settings come either from the consistency schedule or from explicit
    (n_draws, alpha).  ``freeze_posterior`` reuses the first window's draws
    for later windows instead of re-running ABC.
    """
    T_total = len(bundle)
    if holdout >= T_total:
        raise ConfigError("holdout must leave a nonempty estimation sample")
    start_T = T_total - holdout
    results = {}

    for s_idx, spec in enumerate(specs):
        ls = {"r": [], "lnbv": []}
        qs = {"r": [], "lnbv": []}
        cr = {"r": [], "lnbv": []}
        first_draws = None
        mpm = hpd = None
        n_resim = 0
        ds = None
        for k in range(holdout):
            t = start_T + k
            window = bundle.window(t)
            if ds is None or not freeze_posterior:
                if use_schedule:
                    a_t, n_t = tolerance_schedule(t)
                    n_keep = int(round(a_t * n_t))
                else:
                    if n_draws is None or alpha is None:
                        raise ConfigError("need n_draws and alpha when the schedule is off")
                    a_t, n_t = alpha, n_draws
                    n_keep = int(math.ceil(alpha * n_draws))
                fit = fit_aux_qmle(spec.aux_model, (window.returns, window.lnbv),
                                   rng=RngStream(seed, 20, (s_idx, k)))
                table = build_reference_table(
                    prior,
                    lambda th, g, _t=t: _JdBlock(jumpdiff_simulate_block(th, _t, g)),
                    lambda d, _spec=spec, _fit=fit: build_summary_block(_spec, d, _fit),
                    n_t,
                    RngStream(seed, 21, (s_idx, k)),
                    constrain=jumpdiff_constraint,
                    spec_label=spec.label,
                )
                n_resim += table.n_resimulated
                eta_obs = build_summary(spec, window, fit)
                ds = nearest_neighbor_select(table, eta_obs, n_keep=n_keep, studentize=studentize)
            if first_draws is None:
                first_draws = ds.draws.copy()
                mpm = first_draws.mean(axis=0)
                hpd = np.array([hpd_interval(first_draws[:, j]) for j in range(first_draws.shape[1])])
            pred_draws = ds if n_pred_draws is None else _as_drawset(ds.draws[:n_pred_draws])
            pred_r, pred_lnbv = abf_predictive_state_space(
                pred_draws, JumpDiffSSM, np.column_stack([window.returns, window.lnbv]),
                "particle_filter", n_particles,
                RngStream(seed, 22, (s_idx, k)).generator(), m_per_draw=m_per_draw,
            )
            ls["r"].append(log_score(pred_r, bundle.returns[t]))
            qs["r"].append(quadratic_score(pred_r, bundle.returns[t]))
            cr["r"].append(crps(pred_r, bundle.returns[t]))
            ls["lnbv"].append(log_score(pred_lnbv, bundle.lnbv[t]))
            qs["lnbv"].append(quadratic_score(pred_lnbv, bundle.lnbv[t]))
            cr["lnbv"].append(crps(pred_lnbv, bundle.lnbv[t]))
        results[spec.label] = EmpiricalSpecResult(
            spec_label=spec.label,
            posterior_draws=first_draws,
            mpm=mpm,
            hpd=hpd,
            scores_r=(float(np.mean(ls["r"])), float(np.mean(qs["r"])), float(np.mean(cr["r"]))),
            scores_lnbv=(float(np.mean(ls["lnbv"])), float(np.mean(qs["lnbv"])), float(np.mean(cr["lnbv"]))),
            per_window={
                "ls_r": np.array(ls["r"]), "qs_r": np.array(qs["r"]), "crps_r": np.array(cr["r"]),
                "ls_lnbv": np.array(ls["lnbv"]), "qs_lnbv": np.array(qs["lnbv"]),
                "crps_lnbv": np.array(cr["lnbv"]),
            },
            n_resimulated=n_resim,
        )
    return {"specs": results, "param_names": prior.names, "start_T": start_T, "holdout": holdout}


def make_synthetic_bundle(seed: int, length: int = 1750, params: JumpDiffParams = JUMPDIFF_SYNTHETIC_TRUTH,
                          intraday_per_day: int = 78) -> MarketDataBundle:
    from .data import bundle_from_simulation

    sim = jumpdiff_simulate(params, length, intraday_per_day, RngStream(seed, 0))
    return bundle_from_simulation(sim)


def hpd_interval(draws, level: float = 0.95) -> tuple[float, float]:
    """Shortest interval containing ceil(level * n) of the sorted draws."""
    x = np.sort(np.asarray(draws, dtype=float))
    n = len(x)
    if n < 100:
        raise ValueError("need at least 100 draws")
    if not (0.0 < level <= 1.0):
        raise ValueError("level must lie in (0, 1]")
    m = int(math.ceil(level * n))
    if m >= n:
        return float(x[0]), float(x[-1])
    widths = x[m - 1 :] - x[: n - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])
