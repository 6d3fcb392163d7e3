"""Numba kernels for the bootstrap particle filter, vectorized over theta rows.

Multinomial resampling is implemented with sorted uniforms built from
exponential spacings, which makes a resampling pass O(n_particles) per row.
The resampled set is the same multinomial multiset in sorted order, which is
distributionally equivalent for the filter.

All randomness is consumed from a numpy Generator passed in, so results are
deterministic given the stream identity.
"""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)
DEAD = -1.0e308


@njit(cache=True)
def _resample_sorted(values_row, cumw_row, spacings_row, out_row):  # pragma: no cover - jit
    """Multinomial resample one row given unnormalized cumulative weights."""
    p = values_row.shape[0]
    total_e = 0.0
    for j in range(p + 1):
        total_e += spacings_row[j]
    total_w = cumw_row[p - 1]
    acc = 0.0
    k = 0
    for j in range(p):
        acc += spacings_row[j]
        target = acc / total_e * total_w
        while k < p - 1 and cumw_row[k] < target:
            k += 1
        out_row[j] = values_row[k]


@njit(cache=True)
def sv_pf_kernel(y, th1, sd, stat_sd, n_particles, rng):  # pragma: no cover - jit
    """Bootstrap filter for the AR(1) log-variance SV model.

    Returns (terminal lnv (n,p), terminal normalized weights (n,p),
    loglik (n,), alive (n,), per-step increments (n,T)).
    """
    T = y.shape[0]
    n = th1.shape[0]
    p = n_particles
    lnv = rng.standard_normal((n, p))
    for i in range(n):
        for j in range(p):
            lnv[i, j] *= stat_sd[i]
    w = np.empty((n, p))
    cumw = np.empty(p)
    scratch = np.empty(p)
    loglik = np.zeros(n)
    alive = np.ones(n, np.bool_)
    increments = np.zeros((n, T))
    for t in range(T):
        z = rng.standard_normal((n, p))
        e = rng.standard_exponential((n, p + 1))
        y2 = y[t] * y[t]
        for i in range(n):
            mx = DEAD
            for j in range(p):
                v = th1[i] * lnv[i, j] + sd[i] * z[i, j]
                lnv[i, j] = v
                lw = -0.5 * (LOG_2PI + v + y2 * np.exp(-v))
                w[i, j] = lw
                if lw > mx:
                    mx = lw
            if not np.isfinite(mx):
                if alive[i]:
                    alive[i] = False
                    loglik[i] = -np.inf
                for j in range(p):
                    w[i, j] = 1.0
                mx = 0.0
            s = 0.0
            for j in range(p):
                wj = np.exp(w[i, j] - mx)
                w[i, j] = wj
                s += wj
            if alive[i]:
                inc = mx + np.log(s / p)
                loglik[i] += inc
                increments[i, t] = inc
            else:
                increments[i, t] = -np.inf
            if t < T - 1:
                c = 0.0
                for j in range(p):
                    c += w[i, j]
                    cumw[j] = c
                _resample_sorted(lnv[i], cumw, e[i], scratch)
                for j in range(p):
                    lnv[i, j] = scratch[j]
            else:
                for j in range(p):
                    w[i, j] /= s
    return lnv, w, loglik, alive, increments


@njit(cache=True)
def jumpdiff_pf_kernel(
    r_obs, lnbv_obs,
    psi0, psi1, sigma_bv, omega, rho, sigma_h, alpha, d0, beta, gamma, mu, sigma_z,
    n_particles, rng,
):  # pragma: no cover - jit
    """Bootstrap filter for the jump-diffusion state (h_t, dN_t, delta_{t+1}).

    Jump sizes are marginalized in the return density; the intensity is
    carried deterministically per particle.  Returns terminal (h, dn, delta),
    normalized weights, loglik, alive, per-step increments.
    """
    T = r_obs.shape[0]
    n = psi0.shape[0]
    p = n_particles
    h = np.empty((n, p))
    dn = np.zeros((n, p))
    delta = np.empty((n, p))
    d = np.empty(n)
    # per-row stable-draw constants (skewness fixed at -1)
    s_const = np.empty(n)
    b_const = np.empty(n)
    inv_alpha = np.empty(n)
    q_exp = np.empty(n)
    for i in range(n):
        d[i] = d0[i] * (1.0 - beta[i] - gamma[i])
        bt = -math.tan(0.5 * math.pi * alpha[i])
        b_const[i] = math.atan(bt) / alpha[i]
        s_const[i] = (1.0 + bt * bt) ** (0.5 / alpha[i])
        inv_alpha[i] = 1.0 / alpha[i]
        q_exp[i] = (1.0 - alpha[i]) / alpha[i]
        h0 = omega[i] / (1.0 - rho[i])
        for j in range(p):
            h[i, j] = h0
            delta[i, j] = d0[i]
    w = np.empty((n, p))
    cumw = np.empty(p)
    scratch_h = np.empty(p)
    scratch_dn = np.empty(p)
    scratch_delta = np.empty(p)
    loglik = np.zeros(n)
    alive = np.ones(n, np.bool_)
    increments = np.zeros((n, T))
    clamp_lo = 1e-8
    clamp_hi = 1.0 - 1e-8
    for t in range(T):
        u1 = rng.random((n, p))
        u2 = rng.standard_exponential((n, p))
        ub = rng.random((n, p))
        e = rng.standard_exponential((n, p + 1))
        r = r_obs[t]
        lb = lnbv_obs[t]
        for i in range(n):
            mx = DEAD
            sz2 = sigma_z[i] * sigma_z[i]
            lbv_const = -0.5 * (LOG_2PI + 2.0 * np.log(sigma_bv[i]))
            inv2bv = 0.5 / (sigma_bv[i] * sigma_bv[i])
            for j in range(p):
                # alpha-stable transition noise (CMS transform)
                u = math.pi * (u1[i, j] - 0.5)
                wexp = u2[i, j] if u2[i, j] > 1e-300 else 1e-300
                c1 = np.sin(alpha[i] * (u + b_const[i])) / np.cos(u) ** inv_alpha[i]
                c2 = (np.cos(u - alpha[i] * (u + b_const[i])) / wexp) ** q_exp[i]
                eta = s_const[i] * c1 * c2
                hv = omega[i] + rho[i] * h[i, j] + sigma_h[i] * eta
                jump = 1.0 if ub[i, j] < delta[i, j] else 0.0
                h[i, j] = hv
                dn[i, j] = jump
                dnew = d[i] + beta[i] * delta[i, j] + gamma[i] * jump
                if dnew < clamp_lo:
                    dnew = clamp_lo
                elif dnew > clamp_hi:
                    dnew = clamp_hi
                delta[i, j] = dnew
                var_r = np.exp(hv) + jump * sz2
                if var_r < 1e-300:
                    var_r = 1e-300
                dr = r - jump * mu[i]
                lw = -0.5 * (LOG_2PI + np.log(var_r) + dr * dr / var_r)
                dlb = lb - (psi0[i] + psi1[i] * hv)
                lw += lbv_const - dlb * dlb * inv2bv
                w[i, j] = lw
                if lw > mx:
                    mx = lw
            if not np.isfinite(mx):
                if alive[i]:
                    alive[i] = False
                    loglik[i] = -np.inf
                for j in range(p):
                    w[i, j] = 1.0
                mx = 0.0
            s = 0.0
            for j in range(p):
                wj = np.exp(w[i, j] - mx)
                w[i, j] = wj
                s += wj
            if alive[i]:
                inc = mx + np.log(s / p)
                loglik[i] += inc
                increments[i, t] = inc
            else:
                increments[i, t] = -np.inf
            if t < T - 1:
                c = 0.0
                for j in range(p):
                    c += w[i, j]
                    cumw[j] = c
                _resample_sorted(h[i], cumw, e[i], scratch_h)
                _resample_sorted(dn[i], cumw, e[i], scratch_dn)
                _resample_sorted(delta[i], cumw, e[i], scratch_delta)
                for j in range(p):
                    h[i, j] = scratch_h[j]
                    dn[i, j] = scratch_dn[j]
                    delta[i, j] = scratch_delta[j]
            else:
                for j in range(p):
                    w[i, j] /= s
    return h, dn, delta, w, loglik, alive, increments
