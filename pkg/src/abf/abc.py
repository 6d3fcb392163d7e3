"""Reference-table ABC: prior simulation, summary matching, and selection.

Tables are built in fixed-size row blocks.  Block ``b`` of a table always
consumes the sub-stream ``rng.child(b)`` (retries use ``rng.child(b, r)``), so
the table is bit-identical however the blocks are scheduled across workers.
Rows whose parameters violate model-side constraints are redrawn from the
prior; rows whose simulated dataset yields a non-finite summary are
resimulated at the same parameters, with a 100-retry budget per block.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import PriorBox, RngStream
from .errors import DimensionError, EmptyPosteriorError, TableConstructionError

BLOCK_SIZE_DEFAULT = 4096
MAX_RETRIES_DEFAULT = 100
CONTAINER_MAGIC = b"ABF1"


@dataclass(frozen=True)
class ReferenceTable:
    """Prior draws with the summaries of their simulated datasets."""

    thetas: np.ndarray  # (N, k_theta)
    etas: np.ndarray  # (N, d_eta)
    param_names: tuple
    seed_base: tuple
    spec_label: str = ""
    prior_lower: np.ndarray | None = None
    prior_upper: np.ndarray | None = None
    n_resimulated: int = 0

    def __post_init__(self):
        if self.thetas.shape[0] != self.etas.shape[0]:
            raise DimensionError("thetas and etas must have equal row counts")

    @property
    def n_rows(self) -> int:
        return self.thetas.shape[0]


@dataclass(frozen=True)
class AbcDrawSet:
    """Retained posterior draws, sorted by summary distance."""

    draws: np.ndarray  # (n, k_theta)
    distances: np.ndarray  # (n,), nondecreasing
    alpha_used: float
    epsilon_effective: float
    param_names: tuple = ()

    def __post_init__(self):
        if len(self.draws) != len(self.distances):
            raise DimensionError("draws and distances must be parallel")
        if np.any(np.diff(self.distances) < 0):
            raise ValueError("distances must be sorted nondecreasing")

    def __len__(self):
        return len(self.draws)


def build_reference_table(
    prior: PriorBox,
    simulate_block: Callable[[np.ndarray, np.random.Generator], object],
    summarize_block: Callable[[object], np.ndarray],
    n_rows: int,
    rng: RngStream,
    constrain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    block_size: int = BLOCK_SIZE_DEFAULT,
    max_retries: int = MAX_RETRIES_DEFAULT,
    spec_label: str = "",
) -> ReferenceTable:
    """Simulate ``n_rows`` (theta, eta) pairs from the prior and the model."""
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    thetas_out = np.empty((n_rows, prior.dim))
    etas_out: np.ndarray | None = None
    resim = 0

    n_blocks = math.ceil(n_rows / block_size)
    for b in range(n_blocks):
        lo = b * block_size
        hi = min(lo + block_size, n_rows)
        m = hi - lo
        gen = rng.child(b).generator()
        thetas = _draw_valid_thetas(prior, constrain, m, gen, rng.child(b), max_retries)
        data = simulate_block(thetas, gen)
        etas = np.asarray(summarize_block(data), dtype=float)
        if etas_out is None:
            etas_out = np.empty((n_rows, etas.shape[1]))
        bad = ~np.all(np.isfinite(etas), axis=1)
        retry = 0
        while np.any(bad):
            retry += 1
            if retry > max_retries:
                raise TableConstructionError(
                    f"block {b}: {int(bad.sum())} rows still failing after {max_retries} retries"
                )
            resim += int(bad.sum())
            gen_r = rng.child(b, retry).generator()
            data_r = simulate_block(thetas[bad], gen_r)
            etas_r = np.asarray(summarize_block(data_r), dtype=float)
            etas[bad] = etas_r
            bad = ~np.all(np.isfinite(etas), axis=1)
        thetas_out[lo:hi] = thetas
        etas_out[lo:hi] = etas

    return ReferenceTable(
        thetas=thetas_out,
        etas=etas_out,
        param_names=prior.names,
        seed_base=(rng.seed, rng.stream_id) + tuple(rng.subpath),
        spec_label=spec_label,
        prior_lower=prior.lower.copy(),
        prior_upper=prior.upper.copy(),
        n_resimulated=resim,
    )


def _draw_valid_thetas(prior, constrain, m, gen, block_stream, max_retries):
    thetas = prior.sample(gen, m)
    if constrain is None:
        return thetas
    bad = ~np.asarray(constrain(thetas), dtype=bool)
    retry = 0
    while np.any(bad):
        retry += 1
        if retry > max_retries:
            raise TableConstructionError("prior draws keep violating model constraints")
        gen_r = block_stream.child(10_000 + retry).generator()
        thetas[bad] = prior.sample(gen_r, int(bad.sum()))
        bad = ~np.asarray(constrain(thetas), dtype=bool)
    return thetas


def _distances(table: ReferenceTable, eta_obs: np.ndarray, studentize: bool) -> np.ndarray:
    eta_obs = np.asarray(eta_obs, dtype=float)
    if eta_obs.ndim != 1 or len(eta_obs) != table.etas.shape[1]:
        raise DimensionError(
            f"eta_obs has length {len(eta_obs)}, table columns {table.etas.shape[1]}"
        )
    diff = table.etas - eta_obs
    if studentize:
        scale = table.etas.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        diff = diff / scale
    return np.sqrt(np.sum(diff * diff, axis=1))


def accept_reject(
    table: ReferenceTable, eta_obs, epsilon: float, studentize: bool = False
) -> AbcDrawSet:
    """Retain exactly the rows whose summary distance is <= epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    d = _distances(table, eta_obs, studentize)
    keep = np.flatnonzero(d <= epsilon)
    if len(keep) == 0:
        raise EmptyPosteriorError(f"no draws within epsilon={epsilon}; enlarge epsilon or N")
    order = keep[np.argsort(d[keep], kind="stable")]
    return AbcDrawSet(
        draws=table.thetas[order],
        distances=d[order],
        alpha_used=len(order) / table.n_rows,
        epsilon_effective=float(d[order][-1]),
        param_names=table.param_names,
    )


def nearest_neighbor_select(
    table: ReferenceTable,
    eta_obs,
    alpha: float | None = None,
    studentize: bool = False,
    n_keep: int | None = None,
) -> AbcDrawSet:
    """Retain the ceil(alpha * N) smallest-distance rows (ties by row index)."""
    if n_keep is None:
        if alpha is None or not (0.0 < alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        n_keep = math.ceil(alpha * table.n_rows)
    if n_keep < 1 or n_keep > table.n_rows:
        raise ValueError("selection count out of range")
    d = _distances(table, eta_obs, studentize)
    order = np.argsort(d, kind="stable")[:n_keep]
    return AbcDrawSet(
        draws=table.thetas[order],
        distances=d[order],
        alpha_used=n_keep / table.n_rows,
        epsilon_effective=float(d[order][-1]),
        param_names=table.param_names,
    )


def tolerance_schedule(T: int) -> tuple[float, int]:
    """Sample-size-dependent selection fraction and draw budget.

    alpha_T = 50 T^(-3/2) and N_T = round(500 / alpha_T), so the retained
    draw count round(alpha_T * N_T) equals 500 for every T.
    """
    if T < 50:
        raise ValueError("schedule requires T >= 50")
    alpha = 50.0 * T ** (-1.5)
    n_draws = int(round(500.0 / alpha))
    return alpha, n_draws


def schedule_n_keep(T: int) -> int:
    alpha, n_draws = tolerance_schedule(T)
    return int(round(alpha * n_draws))


# --------------------------------------------------------------------------
# columnar binary container (shared with the grid posterior)
# --------------------------------------------------------------------------

def write_columnar(path: str, arrays: dict, header: dict) -> None:
    """Write named float64 arrays column-major little-endian, with a text sidecar."""
    def _i8(v) -> bytes:
        return np.array(v, dtype="<i8").tobytes()

    with open(path, "wb") as f:
        f.write(CONTAINER_MAGIC)
        f.write(_i8(len(arrays)))
        for name, arr in arrays.items():
            arr = np.atleast_2d(np.asarray(arr, dtype="<f8"))
            nb = name.encode()
            f.write(_i8(len(nb)))
            f.write(nb)
            f.write(_i8(arr.shape[0]))
            f.write(_i8(arr.shape[1]))
            f.write(np.asfortranarray(arr).tobytes(order="F"))
    with open(path + ".header.txt", "w", newline="\n") as f:
        for key, value in header.items():
            f.write(f"{key} = {value}\n")


def read_columnar(path: str) -> tuple[dict, dict]:
    with open(path, "rb") as f:
        if f.read(4) != CONTAINER_MAGIC:
            raise ValueError(f"{path} is not a table container")
        (n_arrays,) = np.frombuffer(f.read(8), dtype="<i8")
        arrays = {}
        for _ in range(int(n_arrays)):
            (name_len,) = np.frombuffer(f.read(8), dtype="<i8")
            name = f.read(int(name_len)).decode()
            (rows,) = np.frombuffer(f.read(8), dtype="<i8")
            (cols,) = np.frombuffer(f.read(8), dtype="<i8")
            data = np.frombuffer(f.read(int(rows * cols * 8)), dtype="<f8")
            arrays[name] = data.reshape((int(rows), int(cols)), order="F").copy()
    header = {}
    if os.path.exists(path + ".header.txt"):
        with io.open(path + ".header.txt", "r") as f:
            for line in f:
                if " = " in line:
                    key, value = line.rstrip("\n").split(" = ", 1)
                    header[key] = value
    return arrays, header


def save_reference_table(table: ReferenceTable, path: str) -> None:
    header = {
        "kind": "reference_table",
        "n_rows": table.n_rows,
        "param_names": ",".join(table.param_names),
        "seed_base": ",".join(str(s) for s in table.seed_base),
        "spec_label": table.spec_label,
        "n_resimulated": table.n_resimulated,
    }
    if table.prior_lower is not None:
        header["prior_lower"] = ",".join(repr(float(v)) for v in table.prior_lower)
        header["prior_upper"] = ",".join(repr(float(v)) for v in table.prior_upper)
    write_columnar(path, {"thetas": table.thetas, "etas": table.etas}, header)


def load_reference_table(path: str) -> ReferenceTable:
    arrays, header = read_columnar(path)
    lower = header.get("prior_lower")
    upper = header.get("prior_upper")
    return ReferenceTable(
        thetas=arrays["thetas"],
        etas=arrays["etas"],
        param_names=tuple(header.get("param_names", "").split(",")),
        seed_base=tuple(int(s) for s in header.get("seed_base", "0").split(",")),
        spec_label=header.get("spec_label", ""),
        prior_lower=None if lower is None else np.array([float(v) for v in lower.split(",")]),
        prior_upper=None if upper is None else np.array([float(v) for v in upper.split(",")]),
        n_resimulated=int(header.get("n_resimulated", 0)),
    )
