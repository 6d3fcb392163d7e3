"""Shared independent oracles for the test suite.

These implementations deliberately avoid the package's own code paths: the
Kalman filter is the closed-form reference for the particle filter, the dense
multivariate-normal likelihood is the reference for the innovations
recursion, and the Gil-Pelaez quadrature inverts the stable characteristic
function directly.
"""

import numpy as np
from scipy import integrate, stats


class LinearGaussianSSM:
    """x_t = a x_{t-1} + q w_t,  y_t = x_t + r v_t; stationary start."""

    obs_dim = 1

    def __init__(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        self.a = thetas[:, 0:1]
        self.q = thetas[:, 1:2]
        self.r = thetas[:, 2:3]
        self.stat_sd = np.sqrt(thetas[:, 1:2] ** 2 / (1.0 - thetas[:, 0:1] ** 2))
        self.n = thetas.shape[0]

    def init(self, n_particles, gen):
        return (self.stat_sd * gen.standard_normal((self.n, n_particles)),)

    def propagate(self, state, gen):
        (x,) = state
        return (self.a * x + self.q * gen.standard_normal(x.shape),)

    def log_obs(self, state, y_t):
        (x,) = state
        return -0.5 * (np.log(2.0 * np.pi * self.r**2) + ((y_t - x) / self.r) ** 2)

    def obs_draw(self, state, gen):
        (x,) = state
        return x + self.r * gen.standard_normal(x.shape)


class ConstantObsSSM(LinearGaussianSSM):
    """Same state dynamics but a measurement density constant in the state."""

    def log_obs(self, state, y_t):
        (x,) = state
        return np.zeros_like(x)


def kalman_loglik_and_predictive(y, a, q, r):
    """Exact log-likelihood plus the one-step predictive law of y_{T+1}."""
    y = np.asarray(y, dtype=float)
    m = 0.0
    P = q * q / (1.0 - a * a)
    ll = 0.0
    for t in range(len(y)):
        m_pred = a * m
        P_pred = a * a * P + q * q
        S = P_pred + r * r
        ll += -0.5 * (np.log(2.0 * np.pi * S) + (y[t] - m_pred) ** 2 / S)
        K = P_pred / S
        m = m_pred + K * (y[t] - m_pred)
        P = (1.0 - K) * P_pred
    mean_next = a * m
    var_next = a * a * P + q * q + r * r
    return ll, mean_next, var_next


def stable_cdf_gil_pelaez(x, alpha, beta):
    """CDF of the standardized stable law (1-parameterization) by inversion."""

    def integrand(t):
        cf = np.exp(-(t**alpha) * (1.0 - 1j * beta * np.tan(0.5 * np.pi * alpha)))
        return np.imag(np.exp(-1j * t * x) * cf) / t

    val, _ = integrate.quad(integrand, 1e-10, 80.0, limit=400)
    return 0.5 - val / np.pi


def ma2_dense_loglik(y, theta1, theta2, sigma):
    """Gaussian MA(2) log-likelihood via the full Toeplitz covariance."""
    y = np.asarray(y, dtype=float)
    T = len(y)
    s2 = sigma**2
    g = np.zeros(T)
    g[0] = s2 * (1 + theta1**2 + theta2**2)
    if T > 1:
        g[1] = s2 * theta1 * (1 + theta2)
    if T > 2:
        g[2] = s2 * theta2
    cov = np.array([[g[abs(i - j)] for j in range(T)] for i in range(T)])
    return float(stats.multivariate_normal(mean=np.zeros(T), cov=cov).logpdf(y))


def normal_crps_loss(y, mu, sigma):
    """Closed-form CRPS loss of a normal forecast (positive orientation is its negative)."""
    z = (y - mu) / sigma
    return sigma * (z * (2.0 * stats.norm.cdf(z) - 1.0) + 2.0 * stats.norm.pdf(z) - 1.0 / np.sqrt(np.pi))


def gaussian_hellinger(mu1, s1, mu2, s2):
    bc = np.sqrt(2.0 * s1 * s2 / (s1**2 + s2**2)) * np.exp(-0.25 * (mu1 - mu2) ** 2 / (s1**2 + s2**2))
    return float(np.sqrt(1.0 - bc))


def gelman_rubin(chains):
    """Split-free potential scale reduction over parallel chains (m, n)."""
    chains = np.asarray(chains, dtype=float)
    m, n = chains.shape
    means = chains.mean(axis=1)
    b = n * means.var(ddof=1)
    w = chains.var(axis=1, ddof=1).mean()
    var_hat = (n - 1) / n * w + b / n
    return float(np.sqrt(var_hat / w))
