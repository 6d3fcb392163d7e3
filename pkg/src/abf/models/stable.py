"""Alpha-stable random variates via the Chambers-Mallows-Stuck construction.

Draws are standardized (location 0, unit scale) in the 1-parameterization,
whose characteristic function for alpha != 1 is

    E exp(itX) = exp(-|t|^alpha * (1 - i * beta * sign(t) * tan(pi*alpha/2))).

At alpha = 2 the skewness parameter drops out and X ~ N(0, 2).
"""

from __future__ import annotations

import numpy as np

from ..core import RngStream


def stable_from_uniforms(alpha: float, beta_skew: float, u1, u2):
    """CMS transform of uniforms ``u1, u2`` in (0, 1) to stable draws.

    Pure function of its inputs, so pre-drawn uniform arrays give
    scheduling-independent results inside vectorized simulators and filters.
    """
    if not (1.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (1, 2]")
    u = np.pi * (np.asarray(u1, dtype=float) - 0.5)
    w = -np.log(np.asarray(u2, dtype=float))
    bt = beta_skew * np.tan(0.5 * np.pi * alpha)
    b = np.arctan(bt) / alpha
    s = (1.0 + bt * bt) ** (0.5 / alpha)
    t1 = np.sin(alpha * (u + b)) / np.cos(u) ** (1.0 / alpha)
    t2 = (np.cos(u - alpha * (u + b)) / w) ** ((1.0 - alpha) / alpha)
    return s * t1 * t2


def stable_standard(alpha: float, beta_skew: float, size, generator: np.random.Generator):
    """Standardized stable draws of the given shape from a Generator."""
    u1 = generator.random(size)
    u2 = generator.random(size)
    return stable_from_uniforms(alpha, beta_skew, u1, u2)


def alpha_stable_draw(alpha: float, beta_skew: float = -1.0, rng: RngStream | None = None,
                      size=None, generator=None):
    """Standardized alpha-stable draw(s) with the given skewness.

    Either an ``RngStream`` or an already-built Generator can be supplied.
    """
    if generator is None:
        if rng is None:
            raise ValueError("provide rng or generator")
        generator = rng.generator()
    if size is None:
        return float(stable_standard(alpha, beta_skew, 1, generator)[0])
    return stable_standard(alpha, beta_skew, size, generator)
