"""Boundary conditions and full forward-problem specifications."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError
from .grids import ScalarField, SpatialGrid, TimeGrid, TimeSeries
from .reaction import ReactionCurve

Forcing = Callable[[np.ndarray, float], np.ndarray]


class BCKind(enum.Enum):
    IMPEDANCE = "impedance"
    DIRICHLET = "dirichlet"


class End(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass
class BoundaryCondition:
    """One endpoint condition.

    Impedance encodes ``a * du/dn + gamma * u = b`` with the outward
    normal, so at the left end ``du/dn = -u_x``.  Dirichlet encodes
    ``u = b`` directly (the infinite-gamma limit) and ignores ``gamma``.
    """

    kind: BCKind
    gamma: float = 0.0
    rhs: Union[float, Callable[[float], float], TimeSeries] = 0.0

    def __post_init__(self) -> None:
        if self.kind is BCKind.IMPEDANCE and self.gamma < 0.0:
            raise ConfigurationError(f"impedance coefficient must be >= 0, got {self.gamma}")

    @classmethod
    def dirichlet(cls, rhs=0.0) -> "BoundaryCondition":
        return cls(BCKind.DIRICHLET, 0.0, rhs)

    @classmethod
    def impedance(cls, gamma: float, rhs=0.0) -> "BoundaryCondition":
        return cls(BCKind.IMPEDANCE, gamma, rhs)

    @classmethod
    def neumann(cls, rhs=0.0) -> "BoundaryCondition":
        return cls(BCKind.IMPEDANCE, 0.0, rhs)

    def value(self, t: float) -> float:
        if isinstance(self.rhs, TimeSeries):
            return float(np.interp(t, self.rhs.timegrid.times, self.rhs.values))
        if callable(self.rhs):
            return float(self.rhs(t))
        return float(self.rhs)

    @property
    def is_homogeneous_neumann(self) -> bool:
        return (
            self.kind is BCKind.IMPEDANCE
            and self.gamma == 0.0
            and not isinstance(self.rhs, TimeSeries)
            and not callable(self.rhs)
            and float(self.rhs) == 0.0
        )


def _as_forcing(r) -> Forcing:
    if r is None:
        return lambda x, t: np.zeros_like(x)
    if callable(r):
        return lambda x, t: np.broadcast_to(np.asarray(r(x, t), dtype=float), np.shape(x)).copy()
    value = float(r)
    return lambda x, t: np.full_like(np.asarray(x, dtype=float), value)


_DIRICHLET_COMPAT_TOL = 1e-8


@dataclass
class ProblemSpec:
    """Everything a forward solve needs.

    The forcing is r(x, t): state-dependent forcing is out of scope, and
    solver callers always pass the full node array for ``x``.
    """

    grid: SpatialGrid
    timegrid: TimeGrid
    a: ScalarField
    f: ReactionCurve
    r: Forcing
    u0: ScalarField
    bc_left: BoundaryCondition
    bc_right: BoundaryCondition
    a_min: float = 1e-8
    # nodal shift applied to the reaction argument, f(u + shift(x));
    # used by the zero-initial-value lifting, None everywhere else
    state_shift: Optional[ScalarField] = None

    def __post_init__(self) -> None:
        self.r = _as_forcing(self.r)
        if self.a.grid is not self.grid and self.a.grid != self.grid:
            raise ConfigurationError("diffusion field must live on the problem grid")
        if self.u0.grid is not self.grid and self.u0.grid != self.grid:
            raise ConfigurationError("initial value must live on the problem grid")
        lo = float(np.min(self.a.values))
        if lo < self.a_min:
            raise ConfigurationError(
                f"diffusion coefficient must stay >= {self.a_min}, got min {lo}"
            )
        for bc, node in ((self.bc_left, 0), (self.bc_right, -1)):
            if bc.kind is BCKind.DIRICHLET:
                gap = abs(self.u0.values[node] - bc.value(0.0))
                if gap > _DIRICHLET_COMPAT_TOL:
                    raise ConfigurationError(
                        f"initial value is incompatible with Dirichlet data at t=0 "
                        f"(mismatch {gap:.3e})"
                    )

    def bc(self, end: End) -> BoundaryCondition:
        return self.bc_left if end is End.LEFT else self.bc_right


@dataclass
class ProblemSkeleton:
    """A forward problem with the unknown coefficients left out."""

    grid: SpatialGrid
    timegrid: TimeGrid
    r: Forcing
    u0: ScalarField
    bc_left: BoundaryCondition
    bc_right: BoundaryCondition

    def __post_init__(self) -> None:
        self.r = _as_forcing(self.r)

    def with_coefficients(self, a: ScalarField, f: ReactionCurve) -> ProblemSpec:
        return ProblemSpec(
            grid=self.grid,
            timegrid=self.timegrid,
            a=a,
            f=f,
            r=self.r,
            u0=self.u0,
            bc_left=self.bc_left,
            bc_right=self.bc_right,
        )

    def forcing_at_final_time(self) -> np.ndarray:
        return self.r(self.grid.nodes, self.timegrid.horizon)

    def forcing_trace(self, end: End) -> np.ndarray:
        """Forcing r(x_end, t_k) along the trace end, one value per level."""
        x = self.grid.nodes[0 if end is End.LEFT else -1]
        xs = np.array([x])
        return np.array([float(self.r(xs, t)[0]) for t in self.timegrid.times])
