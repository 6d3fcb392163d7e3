"""Gaussian MA(2) model: simulation, exact likelihood, one-step conditionals.

    y_t = e_t + theta1 * e_{t-1} + theta2 * e_{t-2},   e_t ~ iid N(0, sigma^2)

The exact Gaussian likelihood and the one-step conditional law come from the
innovations (prediction-error) recursion, which for an MA(2) touches only the
last two prediction errors, so a full evaluation is O(T).  Because the model
is 2-dependent the recursion uses only the autocovariances

    g0 = sigma^2 (1 + theta1^2 + theta2^2)
    g1 = sigma^2 theta1 (1 + theta2)
    g2 = sigma^2 theta2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from ..core import RngStream
from ..errors import NumericalFailureError

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Ma2Params:
    theta1: float
    theta2: float
    sigma: float

    names = ("theta1", "theta2", "sigma")

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError("sigma must be positive")

    def to_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.sigma])


def ma2_simulate(params: Ma2Params, length: int, rng: RngStream) -> np.ndarray:
    if length < 3:
        raise ValueError("length must be >= 3")
    g = rng.generator()
    e = g.normal(0.0, params.sigma, size=length + 2)
    return e[2:] + params.theta1 * e[1:-1] + params.theta2 * e[:-2]


def ma2_simulate_block(thetas: np.ndarray, length: int, generator: np.random.Generator) -> np.ndarray:
    """One path per parameter row (theta1, theta2, sigma); shape (n, length)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = thetas.shape[0]
    e = generator.standard_normal((n, length + 2)) * thetas[:, 2:3]
    return e[:, 2:] + thetas[:, 0:1] * e[:, 1:-1] + thetas[:, 1:2] * e[:, :-2]


@njit(cache=True, parallel=True)
def _innovations_batch(y, th1, th2, sig2):  # pragma: no cover - jit
    C = th1.shape[0]
    T = y.shape[0]
    loglik = np.empty(C)
    pred_mean = np.empty(C)
    pred_var = np.empty(C)
    for c in prange(C):
        g0 = sig2[c] * (1.0 + th1[c] * th1[c] + th2[c] * th2[c])
        g1 = sig2[c] * th1[c] * (1.0 + th2[c])
        g2 = sig2[c] * th2[c]
        v_a = g0  # v[n-1]
        v_b = 0.0  # v[n-2]
        th1_prev = 0.0
        e_a = y[0]  # innovation at obs n
        e_b = 0.0  # innovation at obs n-1
        ll = -0.5 * (LOG_2PI + np.log(v_a) + e_a * e_a / v_a)
        t1 = 0.0
        t2 = 0.0
        for n in range(1, T):
            t2 = g2 / v_b if n >= 2 else 0.0
            t1 = (g1 - th1_prev * t2 * v_b) / v_a
            v_n = g0 - t1 * t1 * v_a - t2 * t2 * v_b
            yhat = t1 * e_a + t2 * e_b
            e_new = y[n] - yhat
            ll += -0.5 * (LOG_2PI + np.log(v_n) + e_new * e_new / v_n)
            v_b = v_a
            v_a = v_n
            th1_prev = t1
            e_b = e_a
            e_a = e_new
        # one-step-ahead law for y_{T+1}
        t2 = g2 / v_b if T >= 2 else 0.0
        t1 = (g1 - th1_prev * t2 * v_b) / v_a
        v_T = g0 - t1 * t1 * v_a - t2 * t2 * v_b
        loglik[c] = ll
        pred_mean[c] = t1 * e_a + t2 * e_b
        pred_var[c] = v_T
    return loglik, pred_mean, pred_var


def ma2_innovations_batch(y: np.ndarray, thetas: np.ndarray):
    """Exact log-likelihood and terminal one-step law for many parameter rows.

    Returns ``(loglik, pred_mean, pred_var)``, each of shape (n_rows,).
    """
    y = np.ascontiguousarray(y, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    sig2 = thetas[:, 2] ** 2
    return _innovations_batch(
        y, np.ascontiguousarray(thetas[:, 0]), np.ascontiguousarray(thetas[:, 1]),
        np.ascontiguousarray(sig2),
    )


def ma2_loglikelihood(params: Ma2Params, y: np.ndarray) -> float:
    """Exact Gaussian MA(2) log-likelihood of the full series."""
    if len(y) < 3:
        raise ValueError("length must be >= 3")
    ll, _, _ = ma2_innovations_batch(y, params.to_array()[None, :])
    out = float(ll[0])
    if not np.isfinite(out):
        raise NumericalFailureError("MA(2) log-likelihood is non-finite")
    return out


def ma2_conditional_onestep(params: Ma2Params, y: np.ndarray) -> tuple[float, float]:
    """Mean and variance of y_{T+1} | y, theta (exact for the Gaussian MA(2))."""
    _, m, v = ma2_innovations_batch(y, params.to_array()[None, :])
    return float(m[0]), float(v[0])
