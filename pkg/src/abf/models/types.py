"""Small shared value objects for model outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LATENT_KINDS = ("variance", "log_variance", "jump_indicator", "jump_size", "intensity")


@dataclass(frozen=True)
class LatentPath:
    """One latent state trajectory, labelled by what it represents."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.kind not in LATENT_KINDS:
            raise ValueError(f"unknown latent kind {self.kind!r}")
        if self.kind == "variance" and np.any(values <= 0):
            raise ValueError("variance path must be strictly positive")
        if self.kind == "jump_indicator" and not np.all(np.isin(values, (0.0, 1.0))):
            raise ValueError("jump indicators must be 0/1")

    def __len__(self):
        return len(self.values)
