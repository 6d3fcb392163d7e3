"""Poisson INAR(1): binomial-thinning count autoregression.

    y_t = Binomial(y_{t-1}, rho) + Poisson(lambda)

The stationary marginal is Poisson(lambda / (1 - rho)); lag-l autocorrelation
is rho^l.  The one-step transition pmf is the convolution of the binomial
survivor count with the Poisson innovation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..core import RngStream

PMF_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class Inar1Params:
    rho: float
    lam: float

    names = ("rho", "lambda")

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        if not (self.lam > 0.0):
            raise ValueError("lambda must be positive")

    def to_array(self) -> np.ndarray:
        return np.array([self.rho, self.lam])


def inar1_simulate(params: Inar1Params, length: int, rng: RngStream) -> np.ndarray:
    """Simulate an INAR(1) path started from its stationary marginal."""
    if length < 1:
        raise ValueError("length must be >= 1")
    g = rng.generator()
    y = np.empty(length, dtype=np.int64)
    y[0] = g.poisson(params.lam / (1.0 - params.rho))
    for t in range(1, length):
        y[t] = g.binomial(y[t - 1], params.rho) + g.poisson(params.lam)
    return y


def inar1_simulate_block(thetas: np.ndarray, length: int, generator: np.random.Generator) -> np.ndarray:
    """Simulate one path per parameter row, vectorized across rows.

    ``thetas`` has columns (rho, lambda); returns an int array (n_rows, length).
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    rho = thetas[:, 0]
    lam = thetas[:, 1]
    n = len(rho)
    y = np.empty((n, length), dtype=np.int64)
    y[:, 0] = generator.poisson(lam / (1.0 - rho))
    for t in range(1, length):
        y[:, t] = generator.binomial(y[:, t - 1], rho) + generator.poisson(lam)
    return y


def _support_cap(rho_max: float, lam_max: float, y_last: int, tail_tol: float) -> int:
    # Poisson upper tail bound plus the (bounded) thinning part.
    k = int(stats.poisson.isf(tail_tol / 10.0, lam_max)) + int(y_last) + 5
    return max(k, y_last + 10)


def inar1_conditional_pmf(params: Inar1Params, y_last: int, support_max: int | None = None) -> np.ndarray:
    """One-step transition pmf Pr(Y_{t+1} = k | y_t) on 0..K.

    K starts at ``support_max`` (if given) and is extended until the truncated
    tail mass is below 1e-10.
    """
    if y_last < 0:
        raise ValueError("y_last must be a nonnegative integer")
    k = _support_cap(params.rho, params.lam, y_last, PMF_TAIL_TOL)
    if support_max is not None:
        k = max(k, int(support_max))
    while True:
        pmf = _convolve_pmf(params.rho, params.lam, y_last, k)
        if 1.0 - pmf.sum() < PMF_TAIL_TOL:
            return pmf
        k = 2 * k + 10


def _convolve_pmf(rho: float, lam: float, y_last: int, k_max: int) -> np.ndarray:
    surv = stats.binom.pmf(np.arange(y_last + 1), y_last, rho)
    pois = stats.poisson.pmf(np.arange(k_max + 1), lam)
    out = np.convolve(surv, pois)[: k_max + 1]
    return out


def inar1_conditional_pmf_batch(rhos: np.ndarray, lams: np.ndarray, y_last: int, k_max: int) -> np.ndarray:
    """Transition pmfs for many (rho, lambda) pairs at once, shape (n, k_max+1)."""
    rhos = np.asarray(rhos, dtype=float)
    lams = np.asarray(lams, dtype=float)
    s = np.arange(y_last + 1)
    surv = stats.binom.pmf(s[None, :], y_last, rhos[:, None])  # (n, y_last+1)
    m = np.arange(k_max + 1)
    pois = stats.poisson.pmf(m[None, :], lams[:, None])  # (n, k_max+1)
    out = np.zeros((len(rhos), k_max + 1))
    for j in range(y_last + 1):
        out[:, j:] += surv[:, j : j + 1] * pois[:, : k_max + 1 - j]
    return out
