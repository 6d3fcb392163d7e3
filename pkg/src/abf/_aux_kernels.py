"""Numba kernels for auxiliary-model log-likelihoods.

Each kernel evaluates one parameter point on a block of series (rows) and
returns the per-row log-likelihood plus the fitted conditional-variance path.
Variance recursions are initialized at each row's own mean square, and every
observation is scored (the RGARCH measurement component starts at t=1 because
it conditions on the previous fitted variance).

Parameter constraints are enforced by the callers; kernels assume valid
inputs.  Student-t errors use the unstandardized t density scaled by the
conditional volatility.
"""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _mean_square(row):  # pragma: no cover - jit
    s = 0.0
    for t in range(row.shape[0]):
        s += row[t] * row[t]
    return s / row.shape[0]


@njit(cache=True)
def _log_t_const(nu):  # pragma: no cover - jit
    return math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi)


@njit(cache=True)
def garch_n_loglik(r, omega, a, b):  # pragma: no cover - jit
    B, T = r.shape
    ll = np.empty(B)
    sig2 = np.empty((B, T))
    for i in range(B):
        s2 = _mean_square(r[i])
        acc = 0.0
        for t in range(T):
            if t > 0:
                s2 = omega + a * r[i, t - 1] * r[i, t - 1] + b * s2
                if s2 < 1e-300:
                    s2 = 1e-300
            sig2[i, t] = s2
            acc += -0.5 * (LOG_2PI + np.log(s2) + r[i, t] * r[i, t] / s2)
        ll[i] = acc
    return ll, sig2


@njit(cache=True)
def garch_t_loglik(r, omega, a, b, nu):  # pragma: no cover - jit
    B, T = r.shape
    ll = np.empty(B)
    sig2 = np.empty((B, T))
    c = _log_t_const(nu)
    for i in range(B):
        s2 = _mean_square(r[i])
        acc = 0.0
        for t in range(T):
            if t > 0:
                s2 = omega + a * r[i, t - 1] * r[i, t - 1] + b * s2
                if s2 < 1e-300:
                    s2 = 1e-300
            sig2[i, t] = s2
            z2 = r[i, t] * r[i, t] / s2
            acc += c - 0.5 * np.log(s2) - 0.5 * (nu + 1.0) * np.log(1.0 + z2 / nu)
        ll[i] = acc
    return ll, sig2


@njit(cache=True)
def tarch_t_loglik(r, omega, a, a_neg, b, nu):  # pragma: no cover - jit
    B, T = r.shape
    ll = np.empty(B)
    sig2 = np.empty((B, T))
    c = _log_t_const(nu)
    for i in range(B):
        s2 = _mean_square(r[i])
        acc = 0.0
        for t in range(T):
            if t > 0:
                r2 = r[i, t - 1] * r[i, t - 1]
                thr = r2 if r[i, t - 1] < 0.0 else 0.0
                s2 = omega + a * r2 + a_neg * thr + b * s2
                if s2 < 1e-300:
                    s2 = 1e-300
            sig2[i, t] = s2
            z2 = r[i, t] * r[i, t] / s2
            acc += c - 0.5 * np.log(s2) - 0.5 * (nu + 1.0) * np.log(1.0 + z2 / nu)
        ll[i] = acc
    return ll, sig2


@njit(cache=True)
def egarch_t_loglik(r, b0, b1, b2, b3, nu):  # pragma: no cover - jit
    B, T = r.shape
    ll = np.empty(B)
    sig2 = np.empty((B, T))
    c = _log_t_const(nu)
    # E|t_nu| for the unstandardized Student t
    eabs = 2.0 * math.sqrt(nu) * math.exp(
        math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu)
    ) / (math.sqrt(math.pi) * (nu - 1.0))
    for i in range(B):
        lnv = math.log(_mean_square(r[i]))
        acc = 0.0
        eps_prev = 0.0
        for t in range(T):
            if t > 0:
                lnv = b0 + b1 * lnv + b2 * (abs(eps_prev) - eabs) + b3 * eps_prev
            v = np.exp(lnv)
            if v < 1e-300:
                v = 1e-300
            sig2[i, t] = v
            z2 = r[i, t] * r[i, t] / v
            acc += c - 0.5 * lnv - 0.5 * (nu + 1.0) * np.log(1.0 + z2 / nu)
            eps_prev = r[i, t] / np.sqrt(v)
        ll[i] = acc
    return ll, sig2


@njit(cache=True)
def rgarch_loglik(r, lnbv, g0, g1, g2, g3, g4, g5, g6, g7):  # pragma: no cover - jit
    B, T = r.shape
    ll = np.empty(B)
    sig2 = np.empty((B, T))
    g7f = g7 if g7 > 1e-12 else 1e-12
    for i in range(B):
        lns2 = np.log(_mean_square(r[i]))
        acc = 0.0
        lns2_prev = lns2
        for t in range(T):
            if t > 0:
                lns2_prev = lns2
                lns2 = g0 + g1 * lnbv[i, t - 1] + g2 * lns2
            s2 = np.exp(lns2)
            if s2 < 1e-300:
                s2 = 1e-300
            sig2[i, t] = s2
            acc += -0.5 * (LOG_2PI + lns2 + r[i, t] * r[i, t] / s2)
            if t > 0:
                eps = r[i, t] / np.sqrt(s2)
                m = g3 + g4 * lns2_prev + g5 * eps + g6 * (eps * eps - 1.0)
                d = lnbv[i, t] - m
                acc += -0.5 * (LOG_2PI + 2.0 * np.log(g7f) + d * d / (g7f * g7f))
        ll[i] = acc
    return ll, sig2
