"""Data generating processes: simulators, conditional predictive kernels,
exact likelihood building blocks, and large-sample binding functions."""

from .types import LatentPath
from .stable import alpha_stable_draw, stable_from_uniforms, stable_standard
from .inar1 import (
    Inar1Params,
    inar1_conditional_pmf,
    inar1_conditional_pmf_batch,
    inar1_simulate,
    inar1_simulate_block,
)
from .ma2 import (
    Ma2Params,
    ma2_conditional_onestep,
    ma2_innovations_batch,
    ma2_loglikelihood,
    ma2_simulate,
    ma2_simulate_block,
)
from .sv import SvParams, sv_simulate, sv_simulate_block
from .jumpdiff import (
    JumpDiffParams,
    SimulatedJumpDiff,
    bipower_variation,
    jump_variation,
    jumpdiff_simulate,
    jumpdiff_simulate_block,
)

import numpy as np


def binding_function(model: str, params, n_lags: int = 2) -> np.ndarray:
    """Probability limit of the summary vector as a function of parameters.

    ``inar1``: (mean, lag-1..3 autocorrelations) = (lambda/(1-rho), rho, rho^2, rho^3).
    ``ma2``: true autocovariances at lags 0..n_lags, i.e.
    (sigma^2(1+theta1^2+theta2^2), sigma^2*theta1*(1+theta2), sigma^2*theta2, 0, ...).
    """
    if model == "inar1":
        p = params if isinstance(params, Inar1Params) else Inar1Params(*params)
        return np.array([p.lam / (1.0 - p.rho), p.rho, p.rho**2, p.rho**3])
    if model == "ma2":
        p = params if isinstance(params, Ma2Params) else Ma2Params(*params)
        s2 = p.sigma**2
        out = np.zeros(n_lags + 1)
        out[0] = s2 * (1.0 + p.theta1**2 + p.theta2**2)
        if n_lags >= 1:
            out[1] = s2 * p.theta1 * (1.0 + p.theta2)
        if n_lags >= 2:
            out[2] = s2 * p.theta2
        return out
    raise ValueError(f"no binding function for model {model!r}")


__all__ = [
    "LatentPath",
    "alpha_stable_draw",
    "stable_from_uniforms",
    "stable_standard",
    "Inar1Params",
    "inar1_conditional_pmf",
    "inar1_conditional_pmf_batch",
    "inar1_simulate",
    "inar1_simulate_block",
    "Ma2Params",
    "ma2_conditional_onestep",
    "ma2_innovations_batch",
    "ma2_loglikelihood",
    "ma2_simulate",
    "ma2_simulate_block",
    "SvParams",
    "sv_simulate",
    "sv_simulate_block",
    "JumpDiffParams",
    "SimulatedJumpDiff",
    "bipower_variation",
    "jump_variation",
    "jumpdiff_simulate",
    "jumpdiff_simulate_block",
    "binding_function",
]
