"""Singular-value study of the coefficient-to-trace linearized map.

The base problem is linear diffusion on (0, 1) with a = 1, zero
potential, a Dirichlet-0 left end and a zero-flux right end, started
from the first eigenfunction sin(pi x / 2) of that layout.  Directional
perturbations of the diffusion coefficient or of a zero-order potential
are propagated through the linearized equation

    uhat_t - (a uhat_x)_x = (delta_a u_x)_x        (diffusion direction)
    uhat_t - uhat_xx      = -delta_q u             (potential direction)

with homogeneous data, and observed as a boundary time trace.  Stacking
the traces for a sine basis of directions gives the Jacobian whose
singular values quantify how ill-conditioned each recovery is.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import ConfigurationError
from .grids import ScalarField, TimeSeries, make_time_grid, make_uniform_grid
from .problem import BoundaryCondition, End, ProblemSpec
from .reaction import ReactionCurve
from .solver import StateHistory, _build_operator, solve_forward, trace_at


class PerturbationMode(enum.Enum):
    DIFFUSION_A = "diffusion_a"
    POTENTIAL_Q = "potential_q"


class ObservationKind(enum.Enum):
    """Boundary functional applied to the linearized response.

    The base layout pins the left end to zero and insulates the right
    end, so the two nontrivial boundary signals are the solution value
    at the zero-flux end (the default) and the derivative (heat flux) at
    the pinned end.  The flux variant boosts the leading singular value
    of the diffusion map by a strongly resolution-dependent near-field
    factor; the value trace is resolution-robust.
    """

    VALUE_AT_FLUX_END = "value"
    FLUX_AT_PINNED_END = "flux"


@dataclass
class SensitivitySetup:
    """Configuration of the ill-conditioning study."""

    n_cells: int = 200
    n_steps: int = 100
    horizon: float = 1.0
    n_modes: int = 20
    observation: ObservationKind = ObservationKind.VALUE_AT_FLUX_END
    weighted: bool = True
    _base_cache: Dict[int, StateHistory] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ConfigurationError("need at least one basis mode")

    @property
    def grid(self):
        return make_uniform_grid(1.0, self.n_cells)

    def base_problem(self, n_steps: Optional[int] = None) -> ProblemSpec:
        grid = self.grid
        timegrid = make_time_grid(self.horizon, n_steps or self.n_steps)
        return ProblemSpec(
            grid=grid,
            timegrid=timegrid,
            a=ScalarField.constant(grid, 1.0),
            f=ReactionCurve.zero(-1.0, 2.0),
            r=None,
            u0=ScalarField.from_function(grid, lambda x: np.sin(0.5 * np.pi * x)),
            bc_left=BoundaryCondition.dirichlet(0.0),
            bc_right=BoundaryCondition.neumann(0.0),
        )

    def base_history(self, n_steps: Optional[int] = None) -> StateHistory:
        key = n_steps or self.n_steps
        if key not in self._base_cache:
            self._base_cache[key] = solve_forward(self.base_problem(key))
        return self._base_cache[key]

    def basis_direction(self, n: int) -> ScalarField:
        grid = self.grid
        return ScalarField.from_function(grid, lambda x: np.sin(n * np.pi * x))


def _linearized_source(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    delta: ScalarField,
    base: StateHistory,
) -> np.ndarray:
    """Source rows of the linearized equation, one per time level.

    The diffusion direction applies the same discrete face-average
    operator with coefficient delta_a, which is exactly the derivative of
    the discrete scheme with respect to the coefficient (the zero-flux
    boundary row is linear in the face value; the Dirichlet row is
    enforced strongly and carries no source).
    """
    u = base.values
    if mode is PerturbationMode.POTENTIAL_Q:
        return -delta.values[None, :] * u
    p = base.problem
    lower, diag, upper, _, _ = _build_operator(delta.values, base.grid.dx, p.bc_left, p.bc_right)
    src = diag[None, :] * u
    src[:, :-1] += upper[None, :-1] * u[:, 1:]
    src[:, 1:] += lower[None, 1:] * u[:, :-1]
    return src


def linearized_response(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    delta: ScalarField,
    n_steps: Optional[int] = None,
) -> StateHistory:
    """Full linearized state for an arbitrary perturbation direction."""
    base = setup.base_history(n_steps)
    src = _linearized_source(setup, mode, delta, base)
    dt = base.timegrid.dt
    grid = base.grid

    def source(x, t, _src=src, _dt=dt):
        k = int(round(t / _dt))
        return _src[k]

    linearized = ProblemSpec(
        grid=grid,
        timegrid=base.timegrid,
        a=base.problem.a,
        f=ReactionCurve.zero(-1.0, 1.0),
        r=source,
        u0=ScalarField.constant(grid, 0.0),
        bc_left=BoundaryCondition.dirichlet(0.0),
        bc_right=BoundaryCondition.neumann(0.0),
    )
    return solve_forward(linearized)


def observe(state: StateHistory, kind: ObservationKind) -> TimeSeries:
    """Apply the boundary observation functional to a state history."""
    if kind is ObservationKind.VALUE_AT_FLUX_END:
        return trace_at(state, End.RIGHT)
    v = state.values
    ux0 = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * state.grid.dx)
    return TimeSeries(state.timegrid, ux0)


def sensitivity_solve_direction(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    delta: ScalarField,
    n_steps: Optional[int] = None,
) -> TimeSeries:
    """Observed trace of the linearized response to a direction."""
    return observe(linearized_response(setup, mode, delta, n_steps), setup.observation)


def sensitivity_solve(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    n: int,
    n_steps: Optional[int] = None,
) -> TimeSeries:
    """Linearized trace response for the n-th sine basis direction."""
    if not 1 <= n:
        raise ConfigurationError("basis index must be positive")
    return sensitivity_solve_direction(setup, mode, setup.basis_direction(n), n_steps)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    """Descending singular values of a dense matrix."""
    return np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)


def jacobian_matrix(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    n_steps: Optional[int] = None,
) -> np.ndarray:
    """Columns are the basis responses at the observation times (t > 0).

    With ``weighted`` set, columns carry a sqrt(dt) factor so the
    singular values approximate those of the L2-in-time operator and stay
    comparable across time-step refinements.
    """
    cols = []
    for n in range(1, setup.n_modes + 1):
        trace = sensitivity_solve(setup, mode, n, n_steps)
        cols.append(trace.values[1:])
    mat = np.column_stack(cols)
    if setup.weighted:
        mat = mat * np.sqrt(setup.horizon / (n_steps or setup.n_steps))
    return mat


def jacobian_singular_values(
    setup: SensitivitySetup,
    mode: PerturbationMode,
    n_steps: Optional[int] = None,
) -> np.ndarray:
    return singular_values(jacobian_matrix(setup, mode, n_steps))
