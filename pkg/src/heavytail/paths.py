"""Sample-path containers.

A :class:`SamplePath` is the universal currency for one realization of a
stochastic process: a strictly increasing time grid starting at zero and the
process values on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


def validate_grid(grid) -> np.ndarray:
    """Check a time grid (strictly increasing, grid[0] == 0) and return it as an array."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ParameterError("grid must be a non-empty 1-d sequence of times")
    if g[0] != 0.0:
        raise ParameterError("grid must start at t = 0")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise ParameterError("grid must be strictly increasing")
    return g


@dataclass
class SamplePath:
    """One realization of a process on a time grid.

    ``meta`` labels the process sampled and carries diagnostics attached by
    samplers (e.g. truncation-bias reports).
    """

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = validate_grid(self.grid)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ParameterError("values must have the same length as grid")

    @property
    def label(self) -> str:
        return self.meta.get("label", "")

    def __len__(self) -> int:
        return self.grid.size
