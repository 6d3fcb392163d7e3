"""Shared numeric primitives: parameter vectors, deterministic RNG streams,
distances, and density/CDF utilities used by every other module.

Reproducibility model
---------------------
All randomness flows through :class:`RngStream`, a value object identifying a
counter-based Philox stream by ``(seed, stream_id)`` plus an optional tuple of
sub-identifiers.  Identical identifiers give bit-identical draw sequences on
every run and under any degree of parallelism; distinct identifiers give
statistically independent streams.  Monte Carlo work is always partitioned
into units (table block, MCMC chain, particle filter run, ...) with a stream
assigned up front from the unit's index, never from execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, DimensionError

GRID_POINTS_DEFAULT = 512


@dataclass(frozen=True)
class RngStream:
    """Identifier of a deterministic, independent random stream."""

    seed: int
    stream_id: int = 0
    subpath: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=int(self.seed), spawn_key=(int(self.stream_id),) + tuple(self.subpath)
        )
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *ids: int) -> "RngStream":
        """Derive an independent sub-stream (retries, nested tasks)."""
        return RngStream(self.seed, self.stream_id, self.subpath + tuple(int(i) for i in ids))


@dataclass(frozen=True)
class ParamVector:
    """Ordered parameter values with parallel names."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if values.ndim != 1 or len(values) != len(self.names):
            raise DimensionError("values and names must be parallel 1-d sequences")
        if not np.all(np.isfinite(values)):
            raise ValueError("parameter values must be finite")

    def __len__(self):
        return len(self.values)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values.tolist()))


@dataclass(frozen=True)
class PriorBox:
    """Independent uniform prior with per-parameter bounds."""

    lower: np.ndarray
    upper: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionError("lower and upper must be 1-d and of equal length")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"theta{i}" for i in range(len(lower))))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != len(lower):
            raise DimensionError("names must match the number of bounds")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` parameter vectors, shape ``(n, dim)``."""
        u = rng.random((n, self.dim))
        return self.lower + u * (self.upper - self.lower)

    def contains(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.all((theta >= self.lower) & (theta <= self.upper), axis=1)


@dataclass(frozen=True)
class GridDensity:
    """Density tabulated on a uniform grid, normalized to unit mass.

    The grid points are cell centers; the rectangle rule
    ``sum(ordinates) * cell_width`` is the mass convention used everywhere
    (normalization, CDF, score integrals, merging metrics).
    """

    grid: np.ndarray
    ordinates: np.ndarray
    cell_width: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        ords = np.asarray(self.ordinates, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "ordinates", ords)
        if grid.shape != ords.shape or grid.ndim != 1 or len(grid) < 2:
            raise DimensionError("grid and ordinates must be matching 1-d arrays (>= 2 points)")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.max(np.abs(steps - self.cell_width)) > 1e-10 * max(1.0, abs(self.cell_width)):
            raise ValueError("grid spacing is not uniform to relative tolerance 1e-10")
        if np.any(ords < 0) or not np.all(np.isfinite(ords)):
            raise ValueError("ordinates must be finite and nonnegative")

    @classmethod
    def from_ordinates(cls, grid: np.ndarray, ordinates: np.ndarray) -> "GridDensity":
        """Build a normalized density from raw (nonnegative) ordinates."""
        grid = np.asarray(grid, dtype=float)
        ordinates = np.asarray(ordinates, dtype=float)
        width = float(grid[1] - grid[0]) if len(grid) > 1 else 1.0
        mass = float(np.sum(ordinates) * width)
        if mass <= 0 or not np.isfinite(mass):
            raise DegenerateSampleError("ordinates carry no mass; cannot normalize")
        return cls(grid=grid, ordinates=ordinates / mass, cell_width=width)

    def integral(self) -> float:
        return float(np.sum(self.ordinates) * self.cell_width)

    def ordinate(self, x) -> np.ndarray:
        """Linear interpolation of the density, zero outside the grid."""
        return np.interp(x, self.grid, self.ordinates, left=0.0, right=0.0)

    def cdf(self, x) -> np.ndarray:
        return empirical_cdf(self, x)

    def mean(self) -> float:
        return float(np.sum(self.grid * self.ordinates) * self.cell_width)


def uniform_grid(lo: float, hi: float, n: int = GRID_POINTS_DEFAULT) -> np.ndarray:
    if not (hi > lo):
        raise ValueError("grid upper end must exceed lower end")
    return np.linspace(lo, hi, n)


def euclidean_distance(a, b) -> float:
    """Euclidean distance between equal-length real vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("inputs must be finite")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Rule-of-thumb Gaussian-kernel bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5).

    Falls back to the sd when the IQR is zero (heavily tied samples), so the
    bandwidth is positive whenever the sample has any dispersion.
    """
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    sd = float(np.std(samples))
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = float(q75 - q25)
    if sd == 0.0:
        raise DegenerateSampleError("all samples identical; bandwidth undefined")
    a = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * a * n ** (-0.2)


def kde_ordinates(samples: np.ndarray, eval_points: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian-kernel density of ``samples`` evaluated at ``eval_points``."""
    samples = np.asarray(samples, dtype=float)
    x = np.atleast_1d(np.asarray(eval_points, dtype=float))
    out = np.zeros(len(x))
    # chunk over samples to bound the (n_eval, n_samples) work array
    chunk = max(1, int(4e6 // max(1, len(x))))
    inv_norm = 1.0 / (bandwidth * np.sqrt(2.0 * np.pi))
    for start in range(0, len(samples), chunk):
        s = samples[start : start + chunk]
        z = (x[:, None] - s[None, :]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=1)
    return out * inv_norm / len(samples)


def kde_density(
    samples,
    eval_points=None,
    n_grid: int = GRID_POINTS_DEFAULT,
) -> GridDensity:
    """Gaussian-kernel density estimate on a uniform grid.

    When ``eval_points`` is omitted the grid spans the samples extended by
    four bandwidths on each side, with ``n_grid`` points.  The result is
    normalized to unit mass under the rectangle rule.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2 or float(np.std(samples)) == 0.0:
        raise DegenerateSampleError("need at least two distinct samples for a KDE")
    h = silverman_bandwidth(samples)
    if eval_points is None:
        grid = uniform_grid(float(samples.min()) - 4.0 * h, float(samples.max()) + 4.0 * h, n_grid)
    else:
        grid = np.asarray(eval_points, dtype=float)
    raw = kde_ordinates(samples, grid, h)
    return GridDensity.from_ordinates(grid, raw)


def empirical_cdf(density: GridDensity, x) -> np.ndarray:
    """Rectangle-rule CDF of a grid density, piecewise linear within cells.

    Grid points are cell centers, so the CDF of a symmetric density evaluated
    at its center is exactly 0.5.  Returns 0 below the grid and 1 above it.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x)
    if not np.all(np.isfinite(xv)):
        raise ValueError("evaluation points must be finite")
    w = density.cell_width
    edges = np.concatenate([density.grid - 0.5 * w, [density.grid[-1] + 0.5 * w]])
    mass = density.ordinates * w
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    total = cum[-1]
    idx = np.searchsorted(edges, xv, side="right") - 1
    out = np.empty_like(xv)
    below = idx < 0
    above = idx >= len(mass)
    inside = ~(below | above)
    out[below] = 0.0
    out[above] = total
    i = idx[inside]
    frac = (xv[inside] - edges[i]) / w
    out[inside] = cum[i] + mass[i] * frac
    out = np.clip(out / max(total, 1e-300), 0.0, 1.0)
    return float(out[0]) if scalar else out
