"""Exact-posterior references on deterministic parameter grids.

For models with a tractable likelihood the posterior is evaluated by the
midpoint rule on a tensor grid over the prior box, and the exact predictive
is the posterior-weighted mixture of the model's one-step conditional laws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .abc import read_columnar, write_columnar
from .core import PriorBox, RngStream
from .errors import DegeneratePosteriorError, DimensionError
from .models.inar1 import Inar1Params, inar1_conditional_pmf_batch
from .models.ma2 import ma2_innovations_batch
from .predictive import PredictiveDistribution, from_draws, from_pmf

WEIGHT_PRUNE_MASS = 1e-13


@dataclass(frozen=True)
class GridPosterior:
    """Midpoint-rule posterior over a tensor grid covering the prior box."""

    grid_points: np.ndarray  # (n_cells, k)
    weights: np.ndarray  # (n_cells,), sums to 1
    resolution: tuple
    param_names: tuple = ()

    def __post_init__(self):
        if self.grid_points.shape[0] != len(self.weights):
            raise DimensionError("grid points and weights must be parallel")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    @property
    def n_cells(self) -> int:
        return len(self.weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.grid_points

    def pruned(self, keep_mass: float = 1.0 - WEIGHT_PRUNE_MASS):
        """Cells ordered by weight covering ``keep_mass`` of the posterior."""
        order = np.argsort(self.weights)[::-1]
        cum = np.cumsum(self.weights[order])
        n_keep = int(np.searchsorted(cum, keep_mass) + 1)
        idx = order[:n_keep]
        return self.grid_points[idx], self.weights[idx]


def tensor_grid(prior: PriorBox, resolution: Sequence[int]) -> tuple[np.ndarray, tuple]:
    """Cell centers of a midpoint tensor grid over the prior box."""
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != prior.dim:
        raise DimensionError("resolution must give one count per dimension")
    axes = []
    for lo, hi, r in zip(prior.lower, prior.upper, resolution):
        step = (hi - lo) / r
        axes.append(lo + step * (np.arange(r) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    return points, resolution


def grid_posterior(
    loglik: Callable[[np.ndarray], np.ndarray],
    prior: PriorBox,
    resolution: Sequence[int],
) -> GridPosterior:
    """Posterior weights proportional to exp(loglik) on the midpoint grid.

    ``loglik`` must map an (n_cells, k) matrix of parameter points to a
    vector of log-likelihood values (-inf allowed for impossible cells).
    """
    points, resolution = tensor_grid(prior, resolution)
    ll = np.asarray(loglik(points), dtype=float)
    if ll.shape != (points.shape[0],):
        raise DimensionError("loglik must return one value per grid cell")
    m = np.max(ll)
    if not np.isfinite(m):
        raise DegeneratePosteriorError("all grid cells have -inf log-likelihood")
    w = np.exp(ll - m)
    total = w.sum()
    if total <= 0 or not np.isfinite(total):
        raise DegeneratePosteriorError("posterior weights underflowed everywhere")
    w /= total
    # guard against accumulated rounding in the normalization
    w /= w.sum()
    return GridPosterior(points, w, resolution, prior.names)


# --------------------------------------------------------------------------
# INAR(1) exact pieces
# --------------------------------------------------------------------------

def inar1_loglikelihood(params: Inar1Params, y: np.ndarray) -> float:
    """Exact log-likelihood: stationary first observation, then transitions."""
    theta = np.array([[params.rho, params.lam]])
    return float(inar1_loglik_cells(theta, np.asarray(y, dtype=np.int64))[0])


def inar1_loglik_cells(thetas: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized INAR(1) log-likelihood over parameter rows.

    Works on the observed transition-pair counts: the series enters only
    through the distinct (y_{t-1}, y_t) pairs and their multiplicities, so
    the cost is O(n_cells * n_distinct_pairs * max(y)).
    """
    from scipy.special import gammaln, xlogy

    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    rho = thetas[:, 0]
    lam = thetas[:, 1]
    y = np.asarray(y, dtype=np.int64)
    pairs, counts = np.unique(np.column_stack([y[:-1], y[1:]]), axis=0, return_counts=True)
    a_max = int(pairs[:, 0].max(initial=0))
    b_max = int(pairs[:, 1].max(initial=0))
    s = np.arange(a_max + 1)
    a = np.arange(a_max + 1)
    # survivor pmf table Binom(s; a, rho), shape (cells, a, s); zero for s > a
    valid = s[None, :] <= a[:, None]
    trials_left = np.where(valid, a[:, None] - s[None, :], 0)
    log_choose = np.where(
        valid,
        gammaln(a[:, None] + 1) - gammaln(s[None, :] + 1) - gammaln(np.maximum(trials_left, 0) + 1),
        -np.inf,
    )
    exponent = (
        log_choose[None, :, :]
        + xlogy(s[None, None, :], rho[:, None, None])
        + xlogy(trials_left[None, :, :], (1.0 - rho)[:, None, None])
    )
    surv = np.exp(exponent)
    b = np.arange(b_max + 1)
    pois = np.exp(-lam[:, None] + xlogy(b[None, :], lam[:, None]) - gammaln(b + 1)[None, :])
    mean0 = lam / (1.0 - rho)
    ll = -mean0 + xlogy(y[0], mean0) - gammaln(y[0] + 1)
    for (ai, bi), c in zip(pairs, counts):
        smax = min(ai, bi)
        prob = np.einsum("cs,cs->c", surv[:, ai, : smax + 1], pois[:, bi - smax : bi + 1][:, ::-1])
        ll = ll + c * np.log(np.maximum(prob, 1e-300))
    return ll


def inar1_grid_posterior(y: np.ndarray, prior: PriorBox, resolution: Sequence[int] = (100, 100)) -> GridPosterior:
    return grid_posterior(lambda pts: inar1_loglik_cells(pts, y), prior, resolution)


def exact_predictive_discrete(
    posterior: GridPosterior, cond_pmf_batch, y_last: int, conditioning_T: int = 0
) -> PredictiveDistribution:
    """Posterior-weighted mixture of conditional pmfs (support auto-extended)."""
    points, weights = posterior.pruned()
    weights = weights / weights.sum()
    k = max(30, 2 * int(y_last) + 20)
    while True:
        pm = cond_pmf_batch(points, y_last, k)
        mix = weights @ pm
        if 1.0 - mix.sum() < 1e-10:
            return from_pmf(mix, "exact", conditioning_T, meta={"n_cells": len(weights), "y_last": int(y_last)})
        k = 2 * k + 10


def inar1_cond_pmf_batch(thetas: np.ndarray, y_last: int, k_max: int) -> np.ndarray:
    thetas = np.atleast_2d(thetas)
    return inar1_conditional_pmf_batch(thetas[:, 0], thetas[:, 1], y_last, k_max)


# --------------------------------------------------------------------------
# MA(2) exact pieces
# --------------------------------------------------------------------------

def ma2_grid_posterior(y: np.ndarray, prior: PriorBox, resolution: Sequence[int] = (60, 60, 60)) -> GridPosterior:
    y = np.asarray(y, dtype=float)

    def loglik(points):
        ll, _, _ = ma2_innovations_batch(y, points)
        return ll

    return grid_posterior(loglik, prior, resolution)


def ma2_cond_law(thetas: np.ndarray, y: np.ndarray):
    """One-step conditional mean/variance per parameter row (innovations form)."""
    _, mean, var = ma2_innovations_batch(np.asarray(y, dtype=float), thetas)
    return mean, var


def exact_predictive_continuous(
    posterior: GridPosterior,
    y: np.ndarray,
    n_draws: int,
    rng: RngStream,
    cond_law=ma2_cond_law,
) -> PredictiveDistribution:
    """Sample posterior cells, draw one-step outcomes, and smooth with a KDE."""
    if n_draws < 10_000:
        raise ValueError("n_draws must be >= 10000")
    gen = rng.generator()
    points, weights = posterior.pruned()
    weights = weights / weights.sum()
    counts = gen.multinomial(n_draws, weights)
    used = counts > 0
    means, variances = cond_law(points[used], np.asarray(y, dtype=float))
    samples = np.repeat(means, counts[used]) + np.sqrt(np.repeat(variances, counts[used])) * gen.standard_normal(n_draws)
    return from_draws(samples, "exact", len(y), meta={"n_cells": posterior.n_cells, "n_draws": n_draws})


# --------------------------------------------------------------------------
# persistence (same container as reference tables)
# --------------------------------------------------------------------------

def save_grid_posterior(post: GridPosterior, path: str) -> None:
    header = {
        "kind": "grid_posterior",
        "resolution": ",".join(str(r) for r in post.resolution),
        "param_names": ",".join(post.param_names),
    }
    write_columnar(path, {"grid_points": post.grid_points, "weights": post.weights}, header)


def load_grid_posterior(path: str) -> GridPosterior:
    arrays, header = read_columnar(path)
    return GridPosterior(
        grid_points=arrays["grid_points"],
        weights=arrays["weights"].ravel(),
        resolution=tuple(int(r) for r in header["resolution"].split(",")),
        param_names=tuple(header.get("param_names", "").split(",")),
    )
