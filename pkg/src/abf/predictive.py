"""One-step-ahead predictive distributions.

An approximate (ABC-based) predictive integrates the model's conditional
one-step law against the retained parameter draws: for discrete models the
conditional pmfs are averaged directly (Rao-Blackwellized); for continuous
models one or more outcomes are simulated per retained draw and pooled into a
kernel density estimate; for state-space models a terminal latent state is
attached to each draw first, either by particle filtering (conditioning on
the data) or by plain forward simulation (deliberately ignoring it).

Every construction asserts unit total mass, and every distribution carries
its provenance; score and merging routines reject unprovenanced inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .abc import AbcDrawSet
from .core import GridDensity, kde_density, kde_ordinates, silverman_bandwidth
from .errors import DegenerateInputError, EmptyPosteriorError, ParticleDegeneracyError
from .filtering import forward_simulate_states, run_pf

PROVENANCES = ("abf", "exact", "abf_forward_sim")
PMF_MASS_TOL = 1e-10
GRID_MASS_TOL = 1e-3


@dataclass(frozen=True)
class PredictiveDistribution:
    """A one-step predictive in pmf, grid-density, or sample+KDE form."""

    form: str
    provenance: str
    conditioning_T: int
    pmf: Optional[np.ndarray] = None
    density: Optional[GridDensity] = None
    draws: Optional[np.ndarray] = None
    bandwidth: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.form == "pmf":
            if self.pmf is None:
                raise ValueError("pmf form needs masses")
            if abs(float(self.pmf.sum()) - 1.0) > PMF_MASS_TOL:
                raise DegenerateInputError("pmf mass differs from 1 beyond 1e-10")
        elif self.form in ("grid", "sample_kde"):
            if self.density is None:
                raise ValueError(f"{self.form} form needs a grid density")
            if abs(self.density.integral() - 1.0) > GRID_MASS_TOL:
                raise DegenerateInputError("grid mass differs from 1 beyond 1e-3")
        else:
            raise ValueError(f"unknown form {self.form!r}")

    # -- mass/ordinate/cdf queries ------------------------------------------

    def mass_total(self) -> float:
        if self.form == "pmf":
            return float(self.pmf.sum())
        return self.density.integral()

    def ordinate(self, x) -> float:
        """Density ordinate (or pmf mass at the nearest integer)."""
        if self.form == "pmf":
            k = int(round(float(x)))
            return float(self.pmf[k]) if 0 <= k < len(self.pmf) else 0.0
        if self.form == "sample_kde":
            return float(kde_ordinates(self.draws, np.array([float(x)]), self.bandwidth)[0])
        return float(self.density.ordinate(float(x)))

    def cdf(self, x) -> float:
        if self.form == "pmf":
            k = int(np.floor(float(x)))
            if k < 0:
                return 0.0
            return float(self.pmf[: min(k + 1, len(self.pmf))].sum())
        return float(self.density.cdf(float(x)))

    def support(self) -> tuple[float, float]:
        if self.form == "pmf":
            return 0.0, float(len(self.pmf) - 1)
        return float(self.density.grid[0]), float(self.density.grid[-1])


def from_pmf(pmf, provenance: str, conditioning_T: int, meta: dict | None = None) -> PredictiveDistribution:
    pmf = np.asarray(pmf, dtype=float)
    return PredictiveDistribution(
        form="pmf", provenance=provenance, conditioning_T=conditioning_T,
        pmf=pmf, meta=meta or {},
    )


def from_draws(draws, provenance: str, conditioning_T: int, meta: dict | None = None) -> PredictiveDistribution:
    draws = np.asarray(draws, dtype=float).ravel()
    density = kde_density(draws)
    return PredictiveDistribution(
        form="sample_kde", provenance=provenance, conditioning_T=conditioning_T,
        density=density, draws=draws, bandwidth=silverman_bandwidth(draws), meta=meta or {},
    )


def from_grid(density: GridDensity, provenance: str, conditioning_T: int, meta: dict | None = None) -> PredictiveDistribution:
    return PredictiveDistribution(
        form="grid", provenance=provenance, conditioning_T=conditioning_T,
        density=density, meta=meta or {},
    )


# --------------------------------------------------------------------------
# ABC-based constructions
# --------------------------------------------------------------------------

def abf_predictive_discrete(
    draws: AbcDrawSet, cond_pmf_batch, y_last: int, conditioning_T: int = 0
) -> PredictiveDistribution:
    """Equal-weight average of conditional pmfs across retained draws.

    ``cond_pmf_batch(thetas, y_last, k_max) -> (n, k_max+1)`` supplies the
    conditional transition masses; the support is extended until the averaged
    tail mass is below 1e-10.
    """
    if len(draws) == 0:
        raise EmptyPosteriorError("no retained draws")
    k = max(30, 2 * int(y_last) + 20)
    while True:
        pm = cond_pmf_batch(draws.draws, y_last, k)
        avg = pm.mean(axis=0)
        if 1.0 - avg.sum() < PMF_MASS_TOL:
            return from_pmf(avg, "abf", conditioning_T, meta={"n_draws": len(draws), "y_last": int(y_last)})
        k = 2 * k + 10


def abf_predictive_continuous(
    draws: AbcDrawSet,
    cond_law,
    y: np.ndarray,
    rng_generator: np.random.Generator,
    m_per_draw: int = 1,
    provenance: str = "abf",
) -> PredictiveDistribution:
    """Simulate y_{T+1} per retained draw from the one-step conditional law.

    ``cond_law(thetas, y) -> (means, variances)`` must give the exact
    Gaussian one-step conditional for each parameter row.  ``m_per_draw``
    outcomes are drawn per row and pooled into a KDE.
    """
    if len(draws) == 0:
        raise EmptyPosteriorError("no retained draws")
    means, variances = cond_law(draws.draws, np.asarray(y, dtype=float))
    z = rng_generator.standard_normal((len(means), m_per_draw))
    samples = means[:, None] + np.sqrt(variances)[:, None] * z
    return from_draws(samples, provenance, len(y), meta={"n_draws": len(draws), "m_per_draw": m_per_draw})


def abf_predictive_state_space(
    draws: AbcDrawSet,
    ssm_factory,
    y: np.ndarray,
    state_method: str,
    n_particles: int,
    rng_generator: np.random.Generator,
    m_per_draw: int = 1,
    provenance: str | None = None,
    max_skip_fraction: float = 0.05,
):
    """Predictive with the latent state integrated out per retained draw.

    ``particle_filter`` attaches terminal states from a filtering sweep
    conditioned on ``y`` (one weighted particle draw per theta and outcome);
    ``forward_simulation`` attaches states from unconditional paths that
    ignore ``y`` entirely.  The propagated state then produces the
    observation draws that are pooled into a KDE (one per observable for the
    bivariate jump model).

    Theta rows whose filter degenerates are skipped and counted, up to a 5%
    budget.
    """
    if len(draws) == 0:
        raise EmptyPosteriorError("no retained draws")
    y = np.asarray(y, dtype=float)
    t_len = y.shape[0]
    model = ssm_factory(draws.draws)
    n = model.n
    skipped = 0

    if state_method == "particle_filter":
        run = run_pf(model, y, n_particles, rng_generator)
        alive = run.alive
        skipped = int(np.sum(~alive))
        if skipped > max_skip_fraction * n:
            raise ParticleDegeneracyError(
                f"{skipped}/{n} draws lost to particle degeneracy (budget 5%)"
            )
        state = _sample_terminal(run, m_per_draw, rng_generator)
    elif state_method == "forward_simulation":
        fs = forward_simulate_states(model, t_len, rng_generator, n_paths=m_per_draw)
        state = fs.terminal_states
        alive = np.ones(n, dtype=bool)
    else:
        raise ValueError(f"unknown state_method {state_method!r}")

    state = model.propagate(state, rng_generator)
    obs = model.obs_draw(state, rng_generator)
    if provenance is None:
        provenance = "abf" if state_method == "particle_filter" else "abf_forward_sim"
    meta = {
        "state_method": state_method,
        "n_draws": int(alive.sum()),
        "n_skipped": skipped,
        "m_per_draw": m_per_draw,
        "n_particles": n_particles if state_method == "particle_filter" else 0,
    }
    if isinstance(obs, tuple):
        preds = tuple(
            from_draws(component[alive], provenance, t_len, meta=dict(meta)) for component in obs
        )
        return preds
    return from_draws(obs[alive], provenance, t_len, meta=meta)


def _sample_terminal(run, m: int, gen: np.random.Generator):
    """Draw m particles per theta row from the terminal weighted cloud."""
    w = run.terminal_weights
    n, p = w.shape
    cum = np.cumsum(w, axis=1)
    cum /= cum[:, -1:]
    offsets = 2.0 * np.arange(n)[:, None]
    u = gen.random((n, m))
    idx = np.searchsorted((cum + offsets).ravel(), (u + offsets).ravel(), side="right")
    idx = idx.reshape(n, m) - np.arange(n)[:, None] * p
    idx = np.clip(idx, 0, p - 1)
    rows = np.arange(n)[:, None]
    return tuple(c[rows, idx] for c in run.terminal_state)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def write_predictive_csv(pred: PredictiveDistribution, path: str, extra_meta: dict | None = None) -> None:
    """Write (point, ordinate, cdf) rows with a '#'-prefixed metadata header."""
    lines = [
        f"# form = {pred.form}",
        f"# provenance = {pred.provenance}",
        f"# conditioning_T = {pred.conditioning_T}",
    ]
    meta = dict(pred.meta)
    meta.update(extra_meta or {})
    for key in sorted(meta):
        lines.append(f"# {key} = {meta[key]}")
    lines.append("point,ordinate,cdf")
    if pred.form == "pmf":
        cum = np.cumsum(pred.pmf)
        for k, (p, c) in enumerate(zip(pred.pmf, cum)):
            lines.append(f"{k},{p:.12g},{c:.12g}")
    else:
        grid = pred.density.grid
        cdf = pred.density.cdf(grid)
        for x, p, c in zip(grid, pred.density.ordinates, cdf):
            lines.append(f"{x:.12g},{p:.12g},{c:.12g}")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
