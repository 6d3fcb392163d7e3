"""Latent-state integration: bootstrap particle filtering, plain forward
simulation, and particle-marginal Metropolis-Hastings.

The particle filter is vectorized over parameter draws: state arrays have
shape (n_theta, n_particles) and one filtering sweep handles every retained
theta at once.  Multinomial resampling is applied at every step.  A state
space model is an object bound to a matrix of parameter rows exposing

    init(n_particles, gen)   -> state: tuple of (n_theta, n_particles) arrays
    propagate(state, gen)    -> state
    log_obs(state, y_t)      -> (n_theta, n_particles) log densities
    obs_draw(state, gen)     -> observation draw per particle (array or tuple)

``y_t`` is a scalar for univariate models and a length-2 vector for the
return/log-bipower pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import PriorBox, RngStream
from .errors import ParticleDegeneracyError, TuningFailureError
from .models.jumpdiff import DELTA_CLAMP
from .models.stable import stable_from_uniforms


# --------------------------------------------------------------------------
# state-space adapters
# --------------------------------------------------------------------------

class SvSSM:
    """AR(1) log-variance stochastic volatility, bound to theta rows."""

    obs_dim = 1

    def __init__(self, thetas: np.ndarray):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        self.th1 = thetas[:, 0:1]
        self.sd = np.sqrt(thetas[:, 1:2])
        self.stat_sd = np.sqrt(thetas[:, 1:2] / (1.0 - thetas[:, 0:1] ** 2))
        self.n = thetas.shape[0]

    def run_fast(self, y, n_particles, gen):
        from ._pf_kernels import sv_pf_kernel

        lnv, w, loglik, alive, increments = sv_pf_kernel(
            np.ascontiguousarray(y, dtype=float),
            np.ascontiguousarray(self.th1[:, 0]),
            np.ascontiguousarray(self.sd[:, 0]),
            np.ascontiguousarray(self.stat_sd[:, 0]),
            n_particles, gen,
        )
        return PfRun(terminal_state=(lnv,), terminal_weights=w, loglik=loglik,
                     alive=alive, increments=increments)

    def init(self, n_particles: int, gen: np.random.Generator):
        lnv = self.stat_sd * gen.standard_normal((self.n, n_particles))
        return (lnv,)

    def propagate(self, state, gen):
        (lnv,) = state
        lnv = self.th1 * lnv + self.sd * gen.standard_normal(lnv.shape)
        return (lnv,)

    def log_obs(self, state, y_t):
        (lnv,) = state
        return -0.5 * (np.log(2.0 * np.pi) + lnv + (y_t * y_t) * np.exp(-lnv))

    def obs_draw(self, state, gen):
        (lnv,) = state
        return np.exp(0.5 * lnv) * gen.standard_normal(lnv.shape)


class JumpDiffSSM:
    """Jump diffusion state (h_t, dN_t) with deterministic intensity carry.

    The jump size is marginalized inside the return density:
    r_t | h_t, dN_t ~ N(dN_t mu, e^{h_t} + dN_t sigma_z^2), so the particle
    state needs only (h, dN, delta_next).
    """

    obs_dim = 2

    def __init__(self, thetas: np.ndarray):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        (self.psi0, self.psi1, self.sigma_bv, self.omega, self.rho, self.sigma_h,
         self.alpha, self.d0, self.beta, self.gamma, self.mu, self.sigma_z) = (
            thetas[:, i : i + 1] for i in range(12)
        )
        self.d = self.d0 * (1.0 - self.beta - self.gamma)
        self.n = thetas.shape[0]

    def init(self, n_particles: int, gen: np.random.Generator):
        shape = (self.n, n_particles)
        h = np.broadcast_to(self.omega / (1.0 - self.rho), shape).copy()
        dn = np.zeros(shape)
        delta = np.broadcast_to(self.d0, shape).copy()
        return (h, dn, delta)

    def propagate(self, state, gen):
        h, dn, delta = state
        u1 = gen.random(h.shape)
        u2 = gen.random(h.shape)
        eta = _stable_rows_2d(self.alpha, u1, u2)
        h = self.omega + self.rho * h + self.sigma_h * eta
        dn = (gen.random(h.shape) < delta).astype(float)
        delta = np.clip(self.d + self.beta * delta + self.gamma * dn,
                        DELTA_CLAMP, 1.0 - DELTA_CLAMP)
        return (h, dn, delta)

    def log_obs(self, state, y_t):
        h, dn, _ = state
        r, lnbv = float(y_t[0]), float(y_t[1])
        var_r = np.maximum(np.exp(h) + dn * self.sigma_z**2, 1e-300)
        mean_r = dn * self.mu
        ll = -0.5 * (np.log(2.0 * np.pi * var_r) + (r - mean_r) ** 2 / var_r)
        resid = lnbv - (self.psi0 + self.psi1 * h)
        ll += -0.5 * (np.log(2.0 * np.pi * self.sigma_bv**2) + (resid / self.sigma_bv) ** 2)
        return ll

    def obs_draw(self, state, gen):
        h, dn, _ = state
        eps = gen.standard_normal(h.shape)
        z = self.mu + self.sigma_z * gen.standard_normal(h.shape)
        zeta = gen.standard_normal(h.shape)
        r = np.exp(0.5 * h) * eps + dn * z
        lnbv = self.psi0 + self.psi1 * h + self.sigma_bv * zeta
        return r, lnbv

    def run_fast(self, y, n_particles, gen):
        from ._pf_kernels import jumpdiff_pf_kernel

        y = np.asarray(y, dtype=float)
        cols = [np.ascontiguousarray(c[:, 0]) for c in (
            self.psi0, self.psi1, self.sigma_bv, self.omega, self.rho, self.sigma_h,
            self.alpha, self.d0, self.beta, self.gamma, self.mu, self.sigma_z,
        )]
        h, dn, delta, w, loglik, alive, increments = jumpdiff_pf_kernel(
            np.ascontiguousarray(y[:, 0]), np.ascontiguousarray(y[:, 1]),
            *cols, n_particles, gen,
        )
        return PfRun(terminal_state=(h, dn, delta), terminal_weights=w, loglik=loglik,
                     alive=alive, increments=increments)


def _stable_rows_2d(alpha_col: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    # alpha varies per theta row, broadcast down the particle axis
    u = np.pi * (u1 - 0.5)
    w = -np.log(u2)
    bt = -np.tan(0.5 * np.pi * alpha_col)
    b = np.arctan(bt) / alpha_col
    s = (1.0 + bt * bt) ** (0.5 / alpha_col)
    t1 = np.sin(alpha_col * (u + b)) / np.cos(u) ** (1.0 / alpha_col)
    t2 = (np.cos(u - alpha_col * (u + b)) / w) ** ((1.0 - alpha_col) / alpha_col)
    return s * t1 * t2


# --------------------------------------------------------------------------
# bootstrap particle filter
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParticleCloud:
    """Terminal filtered cloud for one parameter value."""

    particles: tuple  # tuple of (n_particles,) arrays
    weights: np.ndarray
    loglik_increments: np.ndarray  # per-step log mean weights


@dataclass(frozen=True)
class PfRun:
    """Vectorized filter output over theta rows."""

    terminal_state: tuple  # tuple of (n_theta, n_particles) arrays
    terminal_weights: np.ndarray  # (n_theta, n_particles), normalized
    loglik: np.ndarray  # (n_theta,)
    alive: np.ndarray  # (n_theta,) bool; False once all weights vanished
    increments: np.ndarray  # (n_theta, T)


def _resample_rows(state, weights, gen):
    n, p = weights.shape
    cum = np.cumsum(weights, axis=1)
    cum /= cum[:, -1:]
    offsets = 2.0 * np.arange(n)[:, None]
    u = gen.random((n, p))
    idx = np.searchsorted((cum + offsets).ravel(), (u + offsets).ravel(), side="right")
    idx = idx.reshape(n, p) - np.arange(n)[:, None] * p
    idx = np.clip(idx, 0, p - 1)
    rows = np.arange(n)[:, None]
    return tuple(component[rows, idx] for component in state)


def run_pf(model, y: np.ndarray, n_particles: int, gen: np.random.Generator) -> PfRun:
    """One propagate-weight-resample sweep over all theta rows at once.

    Models exposing ``run_fast`` get the compiled kernel path; the generic
    per-step path below implements the identical recursion for any adapter.
    """
    if hasattr(model, "run_fast"):
        return model.run_fast(y, n_particles, gen)
    y = np.asarray(y, dtype=float)
    t_len = y.shape[0]
    n = model.n
    state = model.init(n_particles, gen)
    loglik = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    increments = np.zeros((n, t_len))
    weights = np.full((n, n_particles), 1.0 / n_particles)
    for t in range(t_len):
        state = model.propagate(state, gen)
        logw = model.log_obs(state, y[t])
        m = np.max(logw, axis=1, keepdims=True)
        dead_now = ~np.isfinite(m[:, 0])
        m = np.where(np.isfinite(m), m, 0.0)
        w = np.exp(logw - m)
        w[dead_now] = 1.0  # keep the sweep going; the row is flagged dead
        mean_w = w.mean(axis=1)
        inc = m[:, 0] + np.log(mean_w)
        alive &= ~dead_now
        increments[:, t] = np.where(alive, inc, -np.inf)
        loglik = np.where(alive, loglik + inc, -np.inf)
        weights = w / w.sum(axis=1, keepdims=True)
        if t < t_len - 1:
            state = _resample_rows(state, weights, gen)
    return PfRun(terminal_state=state, terminal_weights=weights, loglik=loglik,
                 alive=alive, increments=increments)


def bootstrap_pf(ssm_factory, theta, y, n_particles: int, rng: RngStream):
    """Filter one parameter value; returns (ParticleCloud, loglik estimate)."""
    if n_particles < 100:
        raise ValueError("n_particles must be >= 100")
    theta = np.asarray(theta, dtype=float)
    model = ssm_factory(theta[None, :])
    run = run_pf(model, y, n_particles, rng.generator())
    if not run.alive[0]:
        t_fail = int(np.argmin(np.isfinite(run.increments[0])))
        raise ParticleDegeneracyError(f"all particle weights vanished at t={t_fail}", t=t_fail)
    cloud = ParticleCloud(
        particles=tuple(c[0] for c in run.terminal_state),
        weights=run.terminal_weights[0],
        loglik_increments=run.increments[0],
    )
    return cloud, float(run.loglik[0])


# --------------------------------------------------------------------------
# forward simulation of the states (ignores the data by construction)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StatePosteriorDraws:
    terminal_states: tuple  # tuple of (n_theta, n_paths) arrays
    method: str  # particle_filter | forward_simulation


def forward_simulate_states(model, T: int, gen: np.random.Generator, n_paths: int = 1) -> StatePosteriorDraws:
    """Unconditional state paths per theta row; terminal values only."""
    state = model.init(n_paths, gen)
    for _ in range(T):
        state = model.propagate(state, gen)
    return StatePosteriorDraws(terminal_states=state, method="forward_simulation")


# --------------------------------------------------------------------------
# particle-marginal Metropolis-Hastings
# --------------------------------------------------------------------------

def pmmh_sample(
    ssm_factory,
    prior: PriorBox,
    y: np.ndarray,
    n_iter: int,
    n_particles: int,
    proposal_sd,
    rng: RngStream,
    n_keep: int = 500,
    loglik_fn: Optional[Callable[[np.ndarray, np.random.Generator], float]] = None,
    start: Optional[np.ndarray] = None,
    adapt_rounds: int = 8,
    pilot_len: int = 300,
) -> tuple[np.ndarray, dict]:
    """Random-walk pseudo-marginal MH targeting the exact posterior.

    The likelihood estimate comes from a fresh bootstrap-filter run per
    proposal (replaceable through ``loglik_fn`` for testing).  The proposal
    scale is adapted on pilot runs until acceptance lands in [0.1, 0.5]; the
    chain then runs ``n_iter`` iterations, discards the first half and thins
    to ``n_keep`` draws.  Returns (draws, info).
    """
    if n_iter < 2000:
        raise ValueError("n_iter must be >= 2000")
    y = np.asarray(y, dtype=float)
    sd = np.asarray(proposal_sd, dtype=float).copy()
    gen = rng.generator()

    if loglik_fn is None:
        def loglik_fn(theta, g):
            model = ssm_factory(theta[None, :])
            run = run_pf(model, y, n_particles, g)
            return float(run.loglik[0])

    theta = np.asarray(start, dtype=float) if start is not None else 0.5 * (prior.lower + prior.upper)
    ll = loglik_fn(theta, gen)

    def run_chain(theta, ll, length, g):
        chain = np.empty((length, prior.dim))
        accepts = 0
        for i in range(length):
            prop = theta + sd * g.standard_normal(prior.dim)
            if np.all((prop >= prior.lower) & (prop <= prior.upper)):
                ll_prop = loglik_fn(prop, g)
                if np.log(g.random()) < ll_prop - ll:
                    theta, ll = prop, ll_prop
                    accepts += 1
            chain[i] = theta
        return chain, theta, ll, accepts / length

    # pilot adaptation
    rate = None
    for r in range(adapt_rounds):
        _, theta, ll, rate = run_chain(theta, ll, pilot_len, rng.child(1, r).generator())
        if 0.1 <= rate <= 0.5:
            break
        sd *= 0.5 if rate < 0.1 else 2.0
    if rate is not None and rate < 0.01:
        raise TuningFailureError(f"PMMH acceptance rate {rate:.4f} after adaptation")

    chain, _, _, rate = run_chain(theta, ll, n_iter, rng.child(2).generator())
    kept = chain[n_iter // 2 :]
    idx = np.linspace(0, len(kept) - 1, n_keep).astype(int)
    info = {"acceptance_rate": rate, "proposal_sd": sd.copy(), "n_iter": n_iter}
    return kept[idx], info
