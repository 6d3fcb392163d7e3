"""Proper scoring rules, expanding-window forecast evaluation, and merging
diagnostics between pairs of predictive distributions.

Scores are positively oriented (higher is better): the log score is the log
predictive ordinate, the quadratic score is 2 p(y) - integral(p^2), and the
CRPS is emitted as the negative of the usual loss so that "largest is best"
holds uniformly across all three rules.

The merging diagnostics quantify how close an approximate predictive is to
the exact one: integrated squared density difference (and a CDF variant),
total variation in density form (1/2) integral |p - g|, Hellinger distance,
and the squared overlap measure [integral min(p, g)]^2.  On a common grid
with both densities normalized, tv <= sqrt(2) * hellinger holds exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import GRID_POINTS_DEFAULT, PriorBox, RngStream, kde_ordinates
from .errors import DegenerateInputError, DimensionError
from .predictive import PredictiveDistribution

SCORE_FLOOR = 1e-300
LOG_FLOOR = math.log(SCORE_FLOOR)


def _check_provenance(pred: PredictiveDistribution) -> None:
    if not getattr(pred, "provenance", ""):
        raise ValueError("refusing to score a predictive without provenance")


def log_score(pred: PredictiveDistribution, y_obs: float) -> float:
    """Log predictive ordinate/mass at the realized value, floored at 1e-300."""
    _check_provenance(pred)
    return math.log(max(pred.ordinate(y_obs), SCORE_FLOOR))


def quadratic_score(pred: PredictiveDistribution, y_obs: float) -> float:
    """2 p(y) - sum(p^2) for pmfs, 2 p(y) - integral(p^2) on the grid."""
    _check_provenance(pred)
    if pred.form == "pmf":
        return 2.0 * pred.ordinate(y_obs) - float(np.sum(pred.pmf**2))
    dens = pred.density
    return 2.0 * pred.ordinate(y_obs) - float(np.sum(dens.ordinates**2) * dens.cell_width)


def crps(pred: PredictiveDistribution, y_obs: float) -> float:
    """Positively oriented CRPS: -integral (F(z) - 1{z >= y})^2 dz."""
    _check_provenance(pred)
    y = float(y_obs)
    if pred.form == "pmf":
        k_hi = max(len(pred.pmf) - 1, int(np.ceil(y)))
        ks = np.arange(0, k_hi + 1)
        cdf = np.cumsum(np.pad(pred.pmf, (0, k_hi + 1 - len(pred.pmf))))
        ind = (ks >= y).astype(float)
        # piecewise-constant on [k, k+1); cells below 0 and above k_hi contribute 0
        return -float(np.sum((cdf - ind) ** 2))
    dens = pred.density
    h = pred.bandwidth if pred.bandwidth else 3.0 * dens.cell_width
    lo = min(dens.grid[0], y) - 6.0 * h
    hi = max(dens.grid[-1], y) + 6.0 * h
    n = int(np.ceil((hi - lo) / dens.cell_width)) + 1
    z = np.linspace(lo, hi, n)
    dz = z[1] - z[0]
    f = dens.cdf(z)
    ind = (z >= y).astype(float)
    return -float(np.sum((f - ind) ** 2) * dz)


# --------------------------------------------------------------------------
# expanding-window evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreReport:
    """Per-step and averaged scores over an expanding-window evaluation."""

    steps: np.ndarray  # conditioning lengths T used per step
    ls: np.ndarray
    qs: np.ndarray
    crps: np.ndarray
    start_T: int
    n_steps: int
    provenance: str
    n_floored: int = 0
    label: str = ""

    @property
    def averages(self) -> tuple[float, float, float]:
        return float(self.ls.mean()), float(self.qs.mean()), float(self.crps.mean())


def expanding_window_eval(
    y_full: np.ndarray,
    forecaster: Callable[[np.ndarray], PredictiveDistribution],
    start_T: int,
    K: int,
    label: str = "",
) -> ScoreReport:
    """Refit on y_{1:T+k} and score the prediction of y_{T+k+1}, k = 0..K-1.

    Any window failure aborts the whole report (partial reports would bias
    the averages).
    """
    y_full = np.asarray(y_full, dtype=float)
    if len(y_full) < start_T + K:
        raise DimensionError(f"need at least start_T + K = {start_T + K} observations")
    steps = np.arange(start_T, start_T + K)
    ls = np.empty(K)
    qs = np.empty(K)
    cr = np.empty(K)
    floored = 0
    provenance = ""
    for k in range(K):
        t = start_T + k
        pred = forecaster(y_full[:t])
        provenance = pred.provenance
        y_next = y_full[t]
        ls[k] = log_score(pred, y_next)
        if ls[k] <= LOG_FLOOR + 1.0:
            floored += 1
        qs[k] = quadratic_score(pred, y_next)
        cr[k] = crps(pred, y_next)
    return ScoreReport(
        steps=steps, ls=ls, qs=qs, crps=cr, start_T=start_T, n_steps=K,
        provenance=provenance, n_floored=floored, label=label,
    )


def write_score_report_csv(report: ScoreReport, path: str) -> None:
    lines = ["step,T,ls,qs,crps"]
    for i in range(report.n_steps):
        lines.append(
            f"{i},{int(report.steps[i])},{report.ls[i]:.12g},{report.qs[i]:.12g},{report.crps[i]:.12g}"
        )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# merging diagnostics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MergingMetrics:
    rmse: float  # integral (p - g)^2 on density ordinates
    rmse_cdf: float  # sqrt(mean (F_p - F_g)^2) on the common grid
    tv: float
    hellinger: float
    ovl: float  # squared overlap
    ovl_unsquared: float

    def as_tuple(self):
        return (self.rmse, self.tv, self.hellinger, self.ovl)


def _common_grid_ordinates(p: PredictiveDistribution, g: PredictiveDistribution, n_grid: int):
    lo = min(p.support()[0], g.support()[0])
    hi = max(p.support()[1], g.support()[1])
    if not hi > lo:
        raise DegenerateInputError("degenerate common support")
    grid = np.linspace(lo, hi, n_grid)
    width = grid[1] - grid[0]

    def ords(pred):
        if pred.form == "sample_kde":
            raw = kde_ordinates(pred.draws, grid, pred.bandwidth)
        elif pred.form == "grid":
            raw = np.interp(grid, pred.density.grid, pred.density.ordinates, left=0.0, right=0.0)
        else:
            raise DegenerateInputError("merging metrics need continuous predictives")
        mass = raw.sum() * width
        if mass <= 0:
            raise DegenerateInputError("density has no mass on the common grid")
        return raw / mass

    return ords(p), ords(g), width


def merging_metrics(
    p: PredictiveDistribution, g: PredictiveDistribution, n_grid: int = GRID_POINTS_DEFAULT
) -> MergingMetrics:
    """Distance diagnostics between two predictives on a common grid."""
    _check_provenance(p)
    _check_provenance(g)
    if p.form == "pmf" and g.form == "pmf":
        n = max(len(p.pmf), len(g.pmf))
        pp = np.pad(p.pmf, (0, n - len(p.pmf)))
        gg = np.pad(g.pmf, (0, n - len(g.pmf)))
        width = 1.0
    else:
        pp, gg, width = _common_grid_ordinates(p, g, n_grid)
    rmse = float(np.sum((pp - gg) ** 2) * width)
    fp = np.cumsum(pp) * width
    fg = np.cumsum(gg) * width
    rmse_cdf = float(np.sqrt(np.mean((fp - fg) ** 2)))
    tv = float(0.5 * np.sum(np.abs(pp - gg)) * width)
    hel = float(np.sqrt(0.5 * np.sum((np.sqrt(pp) - np.sqrt(gg)) ** 2) * width))
    ovl_raw = float(np.sum(np.minimum(pp, gg)) * width)
    return MergingMetrics(
        rmse=rmse, rmse_cdf=rmse_cdf, tv=tv, hellinger=min(hel, 1.0),
        ovl=ovl_raw**2, ovl_unsquared=ovl_raw,
    )


@dataclass(frozen=True)
class MergingReport:
    """Averaged diagnostics per conditioning length for one summary spec."""

    label: str
    T_list: tuple
    replications: int
    rmse: np.ndarray
    rmse_cdf: np.ndarray
    tv: np.ndarray
    hellinger: np.ndarray
    ovl: np.ndarray
    n_failures: int = 0


def write_merging_reports_csv(reports: dict, path: str) -> None:
    lines = ["spec,T,rmse,rmse_cdf,tv,hellinger,ovl,replications"]
    for label in sorted(reports):
        rep = reports[label]
        for i, T in enumerate(rep.T_list):
            lines.append(
                f"{label},{T},{rep.rmse[i]:.12g},{rep.rmse_cdf[i]:.12g},{rep.tv[i]:.12g},"
                f"{rep.hellinger[i]:.12g},{rep.ovl[i]:.12g},{rep.replications}"
            )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def default_resolution_rule(T: int) -> int:
    """Grid points per dimension for the exact reference, growing with T."""
    return int(min(120, max(60, round(60 * math.sqrt(T / 500.0)))))


def merging_experiment(
    theta0,
    lags: Sequence[int],
    T_list: Sequence[int],
    replications: int,
    seed: int,
    prior: PriorBox | None = None,
    resolution_rule: Callable[[int], int] = default_resolution_rule,
    n_exact_draws: int = 20000,
    m_per_draw: int = 20,
    failure_budget: float = 0.02,
) -> dict:
    """Exact-vs-ABF merging for the moving-average study.

    Per replication and conditioning length: simulate data, build the exact
    grid predictive and one ABF predictive per autocovariance lag choice
    (all lag choices share one reference table, selecting on leading summary
    columns), and average the diagnostics over replications.  The selection
    fraction and table size follow the consistency schedule.
    """
    from .abc import build_reference_table, nearest_neighbor_select, tolerance_schedule
    from .exact import exact_predictive_continuous, ma2_cond_law, ma2_grid_posterior
    from .models.ma2 import Ma2Params, ma2_simulate, ma2_simulate_block
    from .predictive import abf_predictive_continuous
    from .summaries import autocov_summary_block

    theta0 = theta0 if isinstance(theta0, Ma2Params) else Ma2Params(*theta0)
    if prior is None:
        prior = PriorBox([0.0, 0.0, 0.1], [0.99, 0.99, 3.0], ("theta1", "theta2", "sigma"))
    max_lag = max(lags)
    T_list = tuple(int(t) for t in T_list)
    acc = {l: {T: [] for T in T_list} for l in lags}
    failures = 0
    budget = max(1, int(math.ceil(failure_budget * replications * len(T_list))))

    for rep in range(replications):
        for T in T_list:
            base = RngStream(seed, rep, (T,))
            try:
                y = ma2_simulate(theta0, T, base.child(0))
                alpha, n_draws = tolerance_schedule(T)
                n_keep = int(round(alpha * n_draws))
                table = build_reference_table(
                    prior,
                    lambda th, g, _T=T: ma2_simulate_block(th, _T, g),
                    lambda d: autocov_summary_block(d, max_lag, "uncentered"),
                    n_draws,
                    base.child(1),
                    spec_label=f"ma2_autocov_l{max_lag}",
                )
                eta_obs = autocov_summary_block(y[None, :], max_lag, "uncentered")[0]
                res = resolution_rule(T)
                post = ma2_grid_posterior(y, prior, (res, res, res))
                exact_pred = exact_predictive_continuous(post, y, n_exact_draws, base.child(2))
                for l in lags:
                    sub = _subtable(table, l + 1)
                    ds = nearest_neighbor_select(sub, eta_obs[: l + 1], n_keep=n_keep)
                    abf_pred = abf_predictive_continuous(
                        ds, ma2_cond_law, y, base.child(3, l).generator(), m_per_draw=m_per_draw
                    )
                    acc[l][T].append(merging_metrics(exact_pred, abf_pred))
            except Exception:
                failures += 1
                if failures > budget:
                    raise
    reports = {}
    for l in lags:
        label = f"eta_l{l}"
        stack = {name: [] for name in ("rmse", "rmse_cdf", "tv", "hellinger", "ovl")}
        for T in T_list:
            ms = acc[l][T]
            for name in stack:
                stack[name].append(float(np.mean([getattr(m, name) for m in ms])))
        reports[label] = MergingReport(
            label=label, T_list=T_list,
            replications=replications,
            rmse=np.array(stack["rmse"]), rmse_cdf=np.array(stack["rmse_cdf"]),
            tv=np.array(stack["tv"]), hellinger=np.array(stack["hellinger"]),
            ovl=np.array(stack["ovl"]), n_failures=failures,
        )
    return reports


def _subtable(table, n_cols: int):
    from .abc import ReferenceTable

    return ReferenceTable(
        thetas=table.thetas,
        etas=table.etas[:, :n_cols],
        param_names=table.param_names,
        seed_base=table.seed_base,
        spec_label=f"{table.spec_label}[:{n_cols}]",
        prior_lower=table.prior_lower,
        prior_upper=table.prior_upper,
        n_resimulated=table.n_resimulated,
    )


def write_scores_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
