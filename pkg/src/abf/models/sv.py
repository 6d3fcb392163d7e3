"""Stochastic volatility with AR(1) log-variance.

    y_t = sqrt(V_t) eps_t,            eps_t ~ iid N(0, 1)
    ln V_t = theta1 ln V_{t-1} + eta_t,  eta_t ~ iid N(0, theta2)

ln V_0 is drawn from the stationary law N(0, theta2 / (1 - theta1^2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import RngStream
from .types import LatentPath


@dataclass(frozen=True)
class SvParams:
    theta1: float
    theta2: float

    names = ("theta1", "theta2")

    def __post_init__(self):
        if not (-1.0 < self.theta1 < 1.0):
            raise ValueError("theta1 must lie in (-1, 1) for stationarity")
        if not (self.theta2 > 0.0):
            raise ValueError("theta2 must be positive")

    def to_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2])

    @property
    def stationary_var(self) -> float:
        return self.theta2 / (1.0 - self.theta1**2)


def sv_simulate(params: SvParams, length: int, rng: RngStream):
    """Simulate returns and the latent variance path; returns (y, LatentPath)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    g = rng.generator()
    lnv = np.empty(length)
    lnv0 = g.normal(0.0, np.sqrt(params.stationary_var))
    s = np.sqrt(params.theta2)
    prev = lnv0
    for t in range(length):
        prev = params.theta1 * prev + s * g.standard_normal()
        lnv[t] = prev
    y = np.exp(0.5 * lnv) * g.standard_normal(length)
    return y, LatentPath(values=np.exp(lnv), kind="variance")


def sv_simulate_block(thetas: np.ndarray, length: int, generator: np.random.Generator) -> np.ndarray:
    """One return path per parameter row (theta1, theta2); shape (n, length)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    th1 = thetas[:, 0]
    s = np.sqrt(thetas[:, 1])
    n = len(th1)
    z = generator.standard_normal((n, length))
    eps = generator.standard_normal((n, length))
    lnv = generator.normal(0.0, np.sqrt(thetas[:, 1] / (1.0 - th1**2)))
    y = np.empty((n, length))
    for t in range(length):
        lnv = th1 * lnv + s * z[:, t]
        y[:, t] = np.exp(0.5 * lnv) * eps[:, t]
    return y
