"""Uniform 1-D space/time grids and fields sampled on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError

_UNIFORMITY_RTOL = 1e-12


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on (0, L) with ``n_cells + 1`` nodes."""

    length: float
    n_cells: int
    nodes: np.ndarray = field(repr=False, compare=False)
    dx: float = 0.0

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ConfigurationError(f"domain length must be positive, got {self.length}")
        if self.n_cells < 4:
            raise ConfigurationError(f"need at least 4 cells, got {self.n_cells}")
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "dx", self.length / self.n_cells)
        if nodes.shape != (self.n_cells + 1,):
            raise ConfigurationError("node array does not match n_cells")
        if nodes[0] != 0.0 or abs(nodes[-1] - self.length) > _UNIFORMITY_RTOL * self.length:
            raise ConfigurationError("grid must span [0, L]")
        spacing = np.diff(nodes)
        if np.any(spacing <= 0.0) or np.max(np.abs(spacing - self.dx)) > _UNIFORMITY_RTOL * self.length:
            raise ConfigurationError("grid nodes must be uniform and increasing")

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1


def make_uniform_grid(length: float, n_cells: int) -> SpatialGrid:
    """Build the uniform spatial grid on (0, length)."""
    if length <= 0.0:
        raise ConfigurationError(f"domain length must be positive, got {length}")
    if n_cells < 4:
        raise ConfigurationError(f"need at least 4 cells, got {n_cells}")
    nodes = np.linspace(0.0, length, n_cells + 1)
    return SpatialGrid(length=float(length), n_cells=int(n_cells), nodes=nodes)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time levels on [0, T] with ``n_steps`` steps."""

    horizon: float
    n_steps: int
    dt: float = 0.0

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if self.n_steps < 4:
            raise ConfigurationError(f"need at least 4 time steps, got {self.n_steps}")
        object.__setattr__(self, "dt", self.horizon / self.n_steps)
        if abs(self.dt * self.n_steps - self.horizon) > _UNIFORMITY_RTOL * self.horizon:
            raise ConfigurationError("dt * n_steps must reproduce the horizon")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


def make_time_grid(horizon: float, n_steps: int) -> TimeGrid:
    return TimeGrid(horizon=float(horizon), n_steps=int(n_steps))


@dataclass
class ScalarField:
    """Nodal samples of a spatial function on a :class:`SpatialGrid`."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ConfigurationError(
                f"field has {self.values.shape} values for {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field values must be finite")

    @classmethod
    def from_function(cls, grid: SpatialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(np.asarray(fn(grid.nodes), dtype=float), grid.nodes.shape).copy())

    @classmethod
    def constant(cls, grid: SpatialGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class TimeSeries:
    """Samples of a time signal on the levels of a :class:`TimeGrid`."""

    timegrid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.timegrid.n_steps + 1,):
            raise ConfigurationError(
                f"series has {self.values.shape} values for "
                f"{self.timegrid.n_steps + 1} time levels"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("series values must be finite")

    @classmethod
    def from_function(cls, timegrid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "TimeSeries":
        return cls(timegrid, np.broadcast_to(np.asarray(fn(timegrid.times), dtype=float), (timegrid.n_steps + 1,)).copy())

    @classmethod
    def constant(cls, timegrid: TimeGrid, value: float) -> "TimeSeries":
        return cls(timegrid, np.full(timegrid.n_steps + 1, float(value)))

    def copy(self) -> "TimeSeries":
        return TimeSeries(self.timegrid, self.values.copy())


def first_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """Second-order first derivative: centered interior, one-sided ends."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * spacing)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * spacing)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * spacing)
    return out


def second_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """Second-order second derivative: centered interior, one-sided ends."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    h2 = spacing * spacing
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    return out


def cumulative_trapezoid(values: np.ndarray, spacing: float) -> np.ndarray:
    """Running trapezoid integral from the first node, starting at zero."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * spacing * (v[1:] + v[:-1]), out=out[1:])
    return out


def trapezoid_mass(values: np.ndarray, spacing: float) -> float:
    v = np.asarray(values, dtype=float)
    return float(spacing * (np.sum(v) - 0.5 * (v[0] + v[-1])))
