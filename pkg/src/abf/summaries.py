"""Summary-statistic vectors for ABC matching.

Three families are supported:

* sample-moment summaries (mean/autocorrelations for count series, raw
  autocovariances for the moving-average study),
* scores of auxiliary GARCH-type likelihoods evaluated at the observed-data
  QMLE, and
* the score summaries augmented with moment statistics of the jump-variation
  and bipower series for the empirical return/volatility pipeline.

The auxiliary score of a dataset is the central finite-difference gradient of
the auxiliary log-likelihood at the observed-data QMLE, divided by the series
length.  At the fitting data itself this vector is ~0 (first-order condition),
so the score of simulated data measures how far the simulation sits from the
observed data through the lens of the auxiliary model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _aux_kernels as _ak
from .core import ParamVector, RngStream
from .errors import (
    DegenerateRegressionError,
    InsufficientDataError,
    InvalidAuxParameterError,
    NumericalFailureError,
    OptimizationFailureError,
)

SCORE_STEP = 1e-5
CONVERGENCE_TOL = 1e-4
NU_MIN, NU_MAX = 2.1, 1000.0

AUX_DISPLAY = {
    "garch_n": "GARCH-N",
    "garch_t": "GARCH-T",
    "tarch_t": "TARCH-T",
    "egarch_t": "EGARCH-T",
    "rgarch": "RGARCH",
}

AUX_PARAM_NAMES = {
    "garch_n": ("omega", "alpha", "beta"),
    "garch_t": ("omega", "alpha", "beta", "nu"),
    "tarch_t": ("omega", "alpha", "alpha_neg", "beta", "nu"),
    "egarch_t": ("b0", "b1", "b2", "b3", "nu"),
    "rgarch": ("g0", "g1", "g2", "g3", "g4", "g5", "g6", "g7"),
}


def aux_dim(aux_model: str) -> int:
    return len(AUX_PARAM_NAMES[aux_model])


def _check_aux_params(aux_model: str, beta: np.ndarray) -> None:
    b = beta
    if aux_model == "garch_n":
        ok = b[0] > 0 and b[1] >= 0 and b[2] >= 0 and b[1] + b[2] < 1
    elif aux_model == "garch_t":
        ok = b[0] > 0 and b[1] >= 0 and b[2] >= 0 and b[1] + b[2] < 1 and NU_MIN <= b[3] <= NU_MAX
    elif aux_model == "tarch_t":
        ok = (
            b[0] > 0 and b[1] >= 0 and b[2] >= 0 and b[3] >= 0
            and b[1] + 0.5 * b[2] + b[3] < 1 and NU_MIN <= b[4] <= NU_MAX
        )
    elif aux_model == "egarch_t":
        ok = abs(b[1]) < 1 and NU_MIN <= b[4] <= NU_MAX
    elif aux_model == "rgarch":
        ok = abs(b[2]) < 1 and b[7] > 0
    else:
        raise ValueError(f"unknown auxiliary model {aux_model!r}")
    if not ok:
        raise InvalidAuxParameterError(f"{aux_model} constraints violated at {b.tolist()}")


def _as_blocks(data):
    """Normalize data to (r_block, lnbv_block) 2-d float arrays."""
    if isinstance(data, tuple):
        r, lnbv = data
    elif hasattr(data, "returns"):
        r = data.returns
        lnbv = getattr(data, "lnbv", None)
    else:
        r, lnbv = data, None
    r = np.ascontiguousarray(np.atleast_2d(np.asarray(r, dtype=float)))
    if lnbv is not None:
        lnbv = np.ascontiguousarray(np.atleast_2d(np.asarray(lnbv, dtype=float)))
    return r, lnbv


def _aux_loglik_block(aux_model: str, beta: np.ndarray, r: np.ndarray, lnbv=None, check: bool = True):
    beta = np.asarray(beta, dtype=float)
    if check:
        _check_aux_params(aux_model, beta)
    if aux_model == "garch_n":
        ll, sig2 = _ak.garch_n_loglik(r, beta[0], beta[1], beta[2])
    elif aux_model == "garch_t":
        ll, sig2 = _ak.garch_t_loglik(r, beta[0], beta[1], beta[2], beta[3])
    elif aux_model == "tarch_t":
        ll, sig2 = _ak.tarch_t_loglik(r, beta[0], beta[1], beta[2], beta[3], beta[4])
    elif aux_model == "egarch_t":
        ll, sig2 = _ak.egarch_t_loglik(r, beta[0], beta[1], beta[2], beta[3], beta[4])
    elif aux_model == "rgarch":
        if lnbv is None:
            raise ValueError("rgarch needs paired (returns, lnbv) data")
        ll, sig2 = _ak.rgarch_loglik(
            r, lnbv, beta[0], beta[1], beta[2], beta[3], beta[4], beta[5], beta[6], beta[7]
        )
    else:
        raise ValueError(f"unknown auxiliary model {aux_model!r}")
    return ll, sig2


def aux_loglikelihood(aux_model: str, beta, data) -> float:
    """Conditional log-likelihood of the auxiliary model on one dataset."""
    beta = np.asarray(getattr(beta, "values", beta), dtype=float)
    r, lnbv = _as_blocks(data)
    ll, _ = _aux_loglik_block(aux_model, beta, r, lnbv)
    return float(ll[0])


def aux_fitted_sigma2(aux_model: str, beta, data) -> np.ndarray:
    """Fitted conditional-variance path(s) of the auxiliary model."""
    beta = np.asarray(getattr(beta, "values", beta), dtype=float)
    r, lnbv = _as_blocks(data)
    _, sig2 = _aux_loglik_block(aux_model, beta, r, lnbv)
    return sig2[0] if sig2.shape[0] == 1 else sig2


@dataclass(frozen=True)
class AuxFit:
    """QMLE of an auxiliary model with its convergence diagnostics."""

    beta_hat: ParamVector
    converged: bool
    loglik_at_opt: float
    aux_model: str = ""


def _aux_start(aux_model: str, data) -> np.ndarray:
    r, lnbv = _as_blocks(data)
    var = float(np.mean(r[0] ** 2))
    if aux_model == "garch_n":
        return np.array([0.05 * var, 0.10, 0.85])
    if aux_model == "garch_t":
        return np.array([0.05 * var, 0.10, 0.85, 8.0])
    if aux_model == "tarch_t":
        return np.array([0.05 * var, 0.05, 0.10, 0.85, 8.0])
    if aux_model == "egarch_t":
        return np.array([0.1 * np.log(var), 0.90, 0.10, -0.05, 8.0])
    if aux_model == "rgarch":
        mlb = float(np.mean(lnbv[0]))
        resid = float(np.std(lnbv[0]))
        return np.array([
            0.05 * np.log(var), 0.40, 0.55,
            mlb - np.log(var), 1.0, 0.0, 0.0, max(0.2, 0.5 * resid),
        ])
    raise ValueError(f"unknown auxiliary model {aux_model!r}")


def fit_aux_qmle(aux_model: str, data, rng: Optional[RngStream] = None, n_starts: int = 5) -> AuxFit:
    """Nelder-Mead QMLE from jittered starting points, best kept.

    The convergence flag requires the per-observation score at the optimum to
    be below 1e-4 in every coordinate.
    """
    r, lnbv = _as_blocks(data)
    if r.shape[1] < 100:
        raise InsufficientDataError("auxiliary QMLE needs at least 100 observations")
    g = (rng or RngStream(0)).generator()
    start = _aux_start(aux_model, data)

    def neg_loglik(beta):
        try:
            ll, _ = _aux_loglik_block(aux_model, np.asarray(beta, dtype=float), r, lnbv)
        except InvalidAuxParameterError:
            return 1e12
        v = float(ll[0])
        return -v if np.isfinite(v) else 1e12

    best = None
    for k in range(n_starts):
        x0 = start if k == 0 else start * (1.0 + 0.1 * g.standard_normal(len(start)))
        res = minimize(
            neg_loglik, x0, method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-9, "maxiter": 4000 * len(start), "maxfev": 4000 * len(start)},
        )
        if best is None or res.fun < best.fun:
            best = res
    # polish the incumbent once
    res = minimize(
        neg_loglik, best.x, method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000 * len(start), "maxfev": 4000 * len(start)},
    )
    if res.fun < best.fun:
        best = res
    if not np.isfinite(best.fun) or best.fun >= 1e12:
        raise OptimizationFailureError("all QMLE starts failed", incumbent=best.x)
    beta_hat = np.asarray(best.x, dtype=float)
    score = aux_score(aux_model, beta_hat, data)
    converged = bool(np.max(np.abs(score)) < CONVERGENCE_TOL)
    return AuxFit(
        beta_hat=ParamVector(beta_hat, AUX_PARAM_NAMES[aux_model]),
        converged=converged,
        loglik_at_opt=-float(best.fun),
        aux_model=aux_model,
    )


def aux_score(aux_model: str, beta_hat, data) -> np.ndarray:
    """Length-normalized central-difference score of one dataset."""
    out = aux_score_block(aux_model, beta_hat, data)
    return out[0]


def aux_score_block(aux_model: str, beta_hat, data) -> np.ndarray:
    """Scores for a block of datasets at a common beta, shape (n_rows, k)."""
    beta = np.asarray(getattr(beta_hat, "values", beta_hat), dtype=float)
    r, lnbv = _as_blocks(data)
    n, t_len = r.shape
    k = len(beta)
    out = np.empty((n, k))
    # central differences may step marginally outside the constraint set when
    # the optimum sits on a boundary; the floored recursions stay finite there
    for j in range(k):
        h = SCORE_STEP * max(1.0, abs(beta[j]))
        bp = beta.copy()
        bp[j] += h
        bm = beta.copy()
        bm[j] -= h
        lp, _ = _aux_loglik_block(aux_model, bp, r, lnbv, check=False)
        lm, _ = _aux_loglik_block(aux_model, bm, r, lnbv, check=False)
        out[:, j] = (lp - lm) / (2.0 * h * t_len)
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError("non-finite auxiliary score")
    return out


# --------------------------------------------------------------------------
# moment summaries
# --------------------------------------------------------------------------

def autocov_summary(y, max_lag: int, kind: str = "centered") -> np.ndarray:
    """Sample moment summary of one series.

    ``centered``: autocovariances at lags 0..max_lag (divisor T).
    ``uncentered``: raw second moments T^{-1} sum_t y_t y_{t-l}, lags 0..max_lag.
    ``inar``: the sample mean followed by autocorrelations at lags 1..max_lag
    (zero when the series is constant).
    """
    out = autocov_summary_block(np.atleast_2d(np.asarray(y, dtype=float)), max_lag, kind)
    return out[0]


def autocov_summary_block(y: np.ndarray, max_lag: int, kind: str = "centered") -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n, t_len = y.shape
    if t_len <= max_lag:
        raise InsufficientDataError(f"series length {t_len} must exceed max_lag {max_lag}")
    if kind == "uncentered":
        out = np.empty((n, max_lag + 1))
        for l in range(max_lag + 1):
            out[:, l] = np.sum(y[:, l:] * y[:, : t_len - l], axis=1) / t_len
        return out
    mean = y.mean(axis=1)
    z = y - mean[:, None]
    gam = np.empty((n, max_lag + 1))
    for l in range(max_lag + 1):
        gam[:, l] = np.sum(z[:, l:] * z[:, : t_len - l], axis=1) / t_len
    if kind == "centered":
        return gam
    if kind == "inar":
        out = np.empty((n, max_lag + 1))
        out[:, 0] = mean
        var = gam[:, 0]
        safe = np.where(var > 0, var, 1.0)
        for l in range(1, max_lag + 1):
            out[:, l] = np.where(var > 0, gam[:, l] / safe, 0.0)
        return out
    raise ValueError(f"unknown autocov kind {kind!r}")


# --------------------------------------------------------------------------
# supplementary statistics for the return/volatility pipeline
# --------------------------------------------------------------------------

def supplementary_stats(returns, lnbv, jv, fitted_sigma2, include_lnbv_block: bool = True) -> np.ndarray:
    """Moment statistics of the jump-variation and log-bipower series.

    Order: mean(sign(r) sqrt(JV)), var(JV), corr(JV_t, JV_{t-1}),
    [skew(ln BV), kurt(ln BV) only when ``include_lnbv_block``], kurt(ln BV)
    when the block is dropped, then the regression of ln BV on log fitted
    variance: intercept, slope, residual sd (dropped with the block).
    """
    out = supplementary_stats_block(
        np.atleast_2d(returns), np.atleast_2d(lnbv), np.atleast_2d(jv),
        np.atleast_2d(fitted_sigma2), include_lnbv_block,
    )
    return out[0]


def supplementary_stats_block(returns, lnbv, jv, fitted_sigma2, include_lnbv_block: bool = True) -> np.ndarray:
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    lb = np.atleast_2d(np.asarray(lnbv, dtype=float))
    j = np.atleast_2d(np.asarray(jv, dtype=float))
    s2 = np.atleast_2d(np.asarray(fitted_sigma2, dtype=float))
    if not (r.shape == lb.shape == j.shape == s2.shape):
        raise ValueError("returns, lnbv, jv and fitted_sigma2 must be aligned")
    if np.any(s2 <= 0):
        raise ValueError("fitted_sigma2 must be strictly positive")

    mean_signed_jump = np.mean(np.sign(r) * np.sqrt(j), axis=1)
    var_jv = np.var(j, axis=1)
    # lag-1 correlation; a jump-free sample has no autocorrelation signal
    ja, jb = j[:, 1:], j[:, :-1]
    ca = ja - ja.mean(axis=1, keepdims=True)
    cb = jb - jb.mean(axis=1, keepdims=True)
    num = np.mean(ca * cb, axis=1)
    den = np.sqrt(np.mean(ca**2, axis=1) * np.mean(cb**2, axis=1))
    corr_jv = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)

    zb = lb - lb.mean(axis=1, keepdims=True)
    m2 = np.mean(zb**2, axis=1)
    skew = np.mean(zb**3, axis=1) / m2**1.5
    kurt = np.mean(zb**4, axis=1) / m2**2

    x = np.log(s2)
    xc = x - x.mean(axis=1, keepdims=True)
    var_x = np.mean(xc**2, axis=1)
    if np.any(var_x < 1e-14):
        raise DegenerateRegressionError("log fitted variance has (near) zero variance")
    slope = np.mean(xc * zb, axis=1) / var_x
    intercept = lb.mean(axis=1) - slope * x.mean(axis=1)
    resid = lb - (intercept[:, None] + slope[:, None] * x)
    resid_sd = np.sqrt(np.mean((resid - resid.mean(axis=1, keepdims=True)) ** 2, axis=1))

    if include_lnbv_block:
        cols = [mean_signed_jump, var_jv, corr_jv, skew, kurt, intercept, slope, resid_sd]
    else:
        cols = [mean_signed_jump, var_jv, corr_jv, kurt]
    return np.column_stack(cols)


# --------------------------------------------------------------------------
# composed summary specs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SummarySpec:
    """What summary vector to compute for a dataset."""

    kind: str  # autocov | aux_score | aux_score_plus_supplementary
    aux_model: str = ""
    max_lag: int = 0
    variant: str = "centered"  # autocov flavor: centered | uncentered | inar

    def __post_init__(self):
        if self.kind not in ("autocov", "aux_score", "aux_score_plus_supplementary"):
            raise ValueError(f"unknown summary kind {self.kind!r}")
        if self.kind == "autocov":
            if self.max_lag < 0:
                raise ValueError("max_lag must be >= 0")
        elif self.aux_model not in AUX_PARAM_NAMES:
            raise ValueError(f"unknown auxiliary model {self.aux_model!r}")

    @property
    def dimension(self) -> int:
        if self.kind == "autocov":
            return self.max_lag + 1
        d = aux_dim(self.aux_model)
        if self.kind == "aux_score_plus_supplementary":
            d += 4 if self.aux_model == "rgarch" else 8
        return d

    @property
    def label(self) -> str:
        if self.kind == "autocov":
            return f"autocov_{self.variant}_l{self.max_lag}"
        return AUX_DISPLAY[self.aux_model]


def build_summary(spec: SummarySpec, data, aux_fit_from_observed: Optional[AuxFit] = None) -> np.ndarray:
    """Summary vector of one dataset under a spec; dimension is fixed per spec."""
    return build_summary_block(spec, data, aux_fit_from_observed)[0]


def build_summary_block(spec: SummarySpec, data, aux_fit_from_observed: Optional[AuxFit] = None) -> np.ndarray:
    """Summaries of a block of datasets, shape (n_rows, spec.dimension).

    For score-based specs the block shares the observed-data QMLE, which must
    be supplied.
    """
    if spec.kind == "autocov":
        y = data.returns if hasattr(data, "returns") else data
        return autocov_summary_block(np.atleast_2d(np.asarray(y, dtype=float)), spec.max_lag, spec.variant)
    if aux_fit_from_observed is None:
        raise ValueError("score-based summaries need the observed-data QMLE")
    beta = aux_fit_from_observed.beta_hat.values
    scores = aux_score_block(spec.aux_model, beta, data)
    if spec.kind == "aux_score":
        return scores
    r, lnbv = _as_blocks(data)
    jv = np.atleast_2d(np.asarray(data.jv, dtype=float))
    _, sig2 = _aux_loglik_block(spec.aux_model, beta, r, lnbv)
    supp = supplementary_stats_block(
        r, lnbv, jv, sig2, include_lnbv_block=(spec.aux_model != "rgarch")
    )
    return np.column_stack([scores, supp])
