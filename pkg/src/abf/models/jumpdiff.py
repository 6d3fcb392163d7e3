"""Jump diffusion for daily returns with a bipower-variation measurement
equation, alpha-stable log-variance transitions and a self-exciting
(Hawkes-type, conditionally deterministic) jump intensity.

    r_t     = exp(h_t / 2) eps_t + dN_t Z_t
    ln BV_t = psi0 + psi1 h_t + sigma_bv zeta_t
    h_t     = omega + rho h_{t-1} + sigma_h eta_t,   eta_t ~ S(alpha, -1, 0)
    Z_t     ~ N(mu, sigma_z^2)
    Pr(dN_t = 1 | F_{t-1}) = delta_t = d + beta delta_{t-1} + gamma dN_{t-1}

The intensity level is parameterized through its unconditional value
d0 = d / (1 - beta - gamma); beta + gamma < 1 is required.  Since d0 < 1 the
recursion then keeps delta_t in (0, 1) automatically; a [1e-8, 1-1e-8] clamp
guards Bernoulli sampling against floating-point drift.

Daily jump variation for simulated data is the jump contribution dN_t Z_t^2
(the population quantity that the realized measure RV - BV estimates), and
RV_t = BV_t + JV_t accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..core import RngStream
from ..errors import ExplosiveIntensityError, InsufficientDataError
from .stable import stable_from_uniforms
from .types import LatentPath

PARAM_NAMES = (
    "psi0", "psi1", "sigma_bv", "omega", "rho", "sigma_h",
    "alpha", "d0", "beta", "gamma", "mu", "sigma_z",
)

DELTA_CLAMP = 1e-8


@dataclass(frozen=True)
class JumpDiffParams:
    psi0: float
    psi1: float
    sigma_bv: float
    omega: float
    rho: float
    sigma_h: float
    alpha: float
    d0: float
    beta: float
    gamma: float
    mu: float
    sigma_z: float

    names = PARAM_NAMES

    def __post_init__(self):
        if self.beta + self.gamma >= 1.0:
            raise ExplosiveIntensityError("beta + gamma must be < 1")
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (1, 2]")
        if self.sigma_bv <= 0.0:
            raise ValueError("sigma_bv must be positive")
        if self.sigma_h < 0.0 or self.sigma_z < 0.0:
            raise ValueError("volatility scales must be nonnegative")
        if not (0.0 < self.d0 < 1.0):
            raise ValueError("d0 must lie in (0, 1) so the intensity stays a probability")
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1)")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, values) -> "JumpDiffParams":
        return cls(*[float(v) for v in values])

    @property
    def d(self) -> float:
        return self.d0 * (1.0 - self.beta - self.gamma)


@dataclass(frozen=True)
class SimulatedJumpDiff:
    """Paired daily observables plus the latent paths that generated them."""

    returns: np.ndarray
    lnbv: np.ndarray
    rv: np.ndarray
    jv: np.ndarray
    paths: Dict[str, LatentPath]
    intraday_per_day: int = 78

    def __len__(self):
        return len(self.returns)


def jumpdiff_simulate(
    params: JumpDiffParams, length: int, intraday_per_day: int = 78, rng: RngStream | None = None
) -> SimulatedJumpDiff:
    """Simulate daily (r_t, ln BV_t) with latent variance, jumps and intensity."""
    if length < 1:
        raise ValueError("length must be >= 1")
    g = rng.generator()
    out = jumpdiff_simulate_block(params.to_array()[None, :], length, g, keep_latent=True)
    paths = {
        "h": LatentPath(out["h"][0], kind="log_variance"),
        "jump_indicator": LatentPath(out["dn"][0], kind="jump_indicator"),
        "jump_size": LatentPath(out["z"][0], kind="jump_size"),
        "intensity": LatentPath(out["delta"][0], kind="intensity"),
    }
    jv = out["jv"][0]
    lnbv = out["lnbv"][0]
    return SimulatedJumpDiff(
        returns=out["r"][0],
        lnbv=lnbv,
        rv=np.exp(lnbv) + jv,
        jv=jv,
        paths=paths,
        intraday_per_day=intraday_per_day,
    )


def jumpdiff_simulate_block(
    thetas: np.ndarray, length: int, generator: np.random.Generator, keep_latent: bool = False
) -> dict:
    """One daily path per parameter row, vectorized across rows.

    Returns dict with "r", "lnbv", "jv" arrays of shape (n, length); latent
    paths are included when requested.  Rows must satisfy beta + gamma < 1.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = thetas.shape[0]
    psi0, psi1, sigma_bv = thetas[:, 0], thetas[:, 1], thetas[:, 2]
    omega, rho, sigma_h = thetas[:, 3], thetas[:, 4], thetas[:, 5]
    alpha, d0, beta, gamma = thetas[:, 6], thetas[:, 7], thetas[:, 8], thetas[:, 9]
    mu, sigma_z = thetas[:, 10], thetas[:, 11]
    if np.any(beta + gamma >= 1.0):
        raise ExplosiveIntensityError("beta + gamma must be < 1 for every row")
    d = d0 * (1.0 - beta - gamma)

    h = omega / (1.0 - rho)  # h_0 at its unconditional mean
    delta = d0.copy()  # delta_1 = d0
    r = np.empty((n, length))
    lnbv = np.empty((n, length))
    jv = np.empty((n, length))
    if keep_latent:
        h_path = np.empty((n, length))
        dn_path = np.empty((n, length))
        z_path = np.empty((n, length))
        delta_path = np.empty((n, length))

    # alpha-stable transforms are only exact per-row at each row's own alpha,
    # so uniforms are drawn and transformed with the row-wise alpha vector
    for t in range(length):
        u1 = generator.random(n)
        u2 = generator.random(n)
        eta = _stable_rows(alpha, u1, u2)
        h = omega + rho * h + sigma_h * eta
        dn = (generator.random(n) < delta).astype(float)
        z = generator.normal(mu, sigma_z)
        eps = generator.standard_normal(n)
        zeta = generator.standard_normal(n)
        r[:, t] = np.exp(0.5 * h) * eps + dn * z
        lnbv[:, t] = psi0 + psi1 * h + sigma_bv * zeta
        jv[:, t] = dn * z * z
        if keep_latent:
            h_path[:, t] = h
            dn_path[:, t] = dn
            z_path[:, t] = z
            delta_path[:, t] = delta
        delta = np.clip(d + beta * delta + gamma * dn, DELTA_CLAMP, 1.0 - DELTA_CLAMP)

    out = {"r": r, "lnbv": lnbv, "jv": jv}
    if keep_latent:
        out.update({"h": h_path, "dn": dn_path, "z": z_path, "delta": delta_path,
                    "delta_next": delta})
    return out


def _stable_rows(alpha: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """CMS transform with a per-row alpha (skewness fixed at -1)."""
    u = np.pi * (u1 - 0.5)
    w = -np.log(u2)
    bt = -np.tan(0.5 * np.pi * alpha)
    b = np.arctan(bt) / alpha
    s = (1.0 + bt * bt) ** (0.5 / alpha)
    t1 = np.sin(alpha * (u + b)) / np.cos(u) ** (1.0 / alpha)
    t2 = (np.cos(u - alpha * (u + b)) / w) ** ((1.0 - alpha) / alpha)
    return s * t1 * t2


def bipower_variation(intraday_returns) -> float:
    """Scaled sum of adjacent absolute intraday returns (jump-robust)."""
    x = np.asarray(intraday_returns, dtype=float)
    m = len(x)
    if m < 2:
        raise InsufficientDataError("bipower variation needs at least 2 intraday returns")
    return float(0.5 * np.pi * (m / (m - 1.0)) * np.sum(np.abs(x[1:]) * np.abs(x[:-1])))


def jump_variation(intraday_returns) -> tuple[float, float]:
    """Realized variance and its jump component (RV, JV = max(RV - BV, 0))."""
    x = np.asarray(intraday_returns, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError("jump variation needs at least 2 intraday returns")
    rv = float(np.sum(x * x))
    bv = bipower_variation(x)
    return rv, max(rv - bv, 0.0)
