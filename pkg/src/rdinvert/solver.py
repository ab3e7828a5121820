"""Crank-Nicolson forward solver for the semilinear diffusion problem.

The divergence-form operator (a u_x)_x is discretized with arithmetic
face averages of ``a``; the face at each boundary is reflected evenly to
the ghost side, which keeps the discrete operator exactly conservative
under homogeneous Neumann conditions.  Impedance conditions enter
through second-order ghost-node elimination, Dirichlet rows are enforced
strongly.  The reaction term on the new level is resolved by fixed-point
(Picard) sweeps on the Crank-Nicolson system; the tridiagonal matrix is
constant over a solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    BlowUpError,
    ConfigurationError,
    StiffnessError,
    UnsupportedConfigurationError,
)
from .grids import ScalarField, SpatialGrid, TimeGrid, TimeSeries
from .problem import BCKind, BoundaryCondition, End, ProblemSpec

PICARD_TOL = 1e-12
PICARD_MAX_SWEEPS = 25


@dataclass
class StateHistory:
    """Dense solve output: row k holds u(., t_k)."""

    grid: SpatialGrid
    timegrid: TimeGrid
    values: np.ndarray
    problem: Optional[ProblemSpec] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.timegrid.n_steps + 1, self.grid.n_nodes)
        if self.values.shape != expected:
            raise ConfigurationError(
                f"state history has shape {self.values.shape}, expected {expected}"
            )


def _build_operator(a: np.ndarray, dx: float, bc_left: BoundaryCondition, bc_right: BoundaryCondition):
    """Tridiagonal L plus affine boundary-load coefficients.

    Returns (lower, diag, upper, aff_left, aff_right) where the affine
    coefficients multiply the boundary data b(t).  Impedance rows balance
    the half cell next to the boundary against the face flux and the
    boundary flux from the impedance relation (a u_x = gamma u - b on the
    left, b - gamma u on the right), which keeps the operator exactly
    conservative and linear in the coefficient.  Dirichlet rows are left
    zero; the time stepper overwrites them.
    """
    n = a.size - 1
    faces = 0.5 * (a[:-1] + a[1:])
    inv_dx2 = 1.0 / (dx * dx)
    lower = np.zeros(n + 1)
    diag = np.zeros(n + 1)
    upper = np.zeros(n + 1)
    lower[1:n] = faces[:-1] * inv_dx2
    upper[1:n] = faces[1:] * inv_dx2
    diag[1:n] = -(faces[:-1] + faces[1:]) * inv_dx2

    aff_left = 0.0
    if bc_left.kind is BCKind.IMPEDANCE:
        upper[0] = 2.0 * faces[0] * inv_dx2
        diag[0] = -2.0 * faces[0] * inv_dx2 - 2.0 * bc_left.gamma / dx
        aff_left = 2.0 / dx

    aff_right = 0.0
    if bc_right.kind is BCKind.IMPEDANCE:
        lower[n] = 2.0 * faces[-1] * inv_dx2
        diag[n] = -2.0 * faces[-1] * inv_dx2 - 2.0 * bc_right.gamma / dx
        aff_right = 2.0 / dx

    return lower, diag, upper, aff_left, aff_right


def apply_operator(a: ScalarField, u: np.ndarray, bc_left: BoundaryCondition, bc_right: BoundaryCondition) -> np.ndarray:
    """Apply the discrete (a u_x)_x operator, without boundary loads.

    Dirichlet rows come back zero; they are enforced strongly elsewhere.
    """
    lower, diag, upper, _, _ = _build_operator(a.values, a.grid.dx, bc_left, bc_right)
    out = diag * u
    out[:-1] += upper[:-1] * u[1:]
    out[1:] += lower[1:] * u[:-1]
    return out


def solve_forward(p: ProblemSpec) -> StateHistory:
    """March the Crank-Nicolson scheme over the full time grid."""
    grid, tg = p.grid, p.timegrid
    n, dt = grid.n_cells, tg.dt
    x = grid.nodes
    lower, diag, upper, aff_l, aff_r = _build_operator(p.a.values, grid.dx, p.bc_left, p.bc_right)

    dir_left = p.bc_left.kind is BCKind.DIRICHLET
    dir_right = p.bc_right.kind is BCKind.DIRICHLET

    # banded M = I - (dt/2) L, Dirichlet rows replaced by identity
    ab = np.zeros((3, n + 1))
    ab[0, 1:] = -0.5 * dt * upper[:-1]
    ab[1, :] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower[1:]
    if dir_left:
        ab[1, 0] = 1.0
        ab[0, 1] = 0.0
    if dir_right:
        ab[1, n] = 1.0
        ab[2, n - 1] = 0.0

    def apply_l(u: np.ndarray) -> np.ndarray:
        out = diag * u
        out[:-1] += upper[:-1] * u[1:]
        out[1:] += lower[1:] * u[:-1]
        return out

    def load(t: float) -> np.ndarray:
        vec = np.zeros(n + 1)
        if aff_l:
            vec[0] = aff_l * p.bc_left.value(t)
        if aff_r:
            vec[n] = aff_r * p.bc_right.value(t)
        return vec

    history = np.empty((tg.n_steps + 1, n + 1))
    errstate = np.errstate(over="ignore", invalid="ignore")
    u = p.u0.values.copy()
    if dir_left:
        u[0] = p.bc_left.value(0.0)
    if dir_right:
        u[n] = p.bc_right.value(0.0)
    history[0] = u

    shift = p.state_shift.values if p.state_shift is not None else 0.0
    r_k = p.r(x, 0.0)
    load_k = load(0.0)
    with errstate:
        for k in range(tg.n_steps):
            t_next = (k + 1) * dt
            r_next = p.r(x, t_next)
            load_next = load(t_next)
            f_k = p.f.eval(u + shift)
            base = u + 0.5 * dt * (apply_l(u) + load_k + load_next + r_k + r_next + f_k)

            w = u.copy()
            converged = False
            update = np.inf
            for _ in range(PICARD_MAX_SWEEPS):
                rhs = base + 0.5 * dt * p.f.eval(w + shift)
                if dir_left:
                    rhs[0] = p.bc_left.value(t_next)
                if dir_right:
                    rhs[n] = p.bc_right.value(t_next)
                w_new = solve_banded((1, 1), ab, rhs, check_finite=False)
                if not np.all(np.isfinite(w_new)):
                    bad = int(np.flatnonzero(~np.isfinite(w_new))[0])
                    raise BlowUpError(k + 1, bad)
                update = float(np.max(np.abs(w_new - w)))
                w = w_new
                if update < PICARD_TOL:
                    converged = True
                    break
            if not converged:
                raise StiffnessError(k + 1, update, PICARD_MAX_SWEEPS)

            u = w
            history[k + 1] = u
            r_k, load_k = r_next, load_next

    return StateHistory(grid=grid, timegrid=tg, values=history, problem=p)


def time_derivative_at_T(s: StateHistory) -> ScalarField:
    """u_t(., T) by the one-sided second-order backward difference."""
    if s.timegrid.n_steps < 3:
        raise ConfigurationError("need at least 3 time steps to differentiate at T")
    v = s.values
    dt = s.timegrid.dt
    return ScalarField(s.grid, (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt))


def boundary_second_derivative(
    s: StateHistory, end: End, bc: Optional[BoundaryCondition] = None
) -> TimeSeries:
    """u_xx at an endpoint with a homogeneous zero-flux condition.

    The ghost formula 2 (u_inner - u_end) / dx**2 builds in u_x = 0 at the
    chosen end, so it is only valid when that end carries a homogeneous
    Neumann condition.
    """
    if bc is None:
        if s.problem is None:
            raise UnsupportedConfigurationError(
                "no boundary condition available; pass one explicitly"
            )
        bc = s.problem.bc(end)
    if not bc.is_homogeneous_neumann:
        raise UnsupportedConfigurationError(
            f"{end.value} end does not carry a homogeneous Neumann condition"
        )
    dx2 = s.grid.dx * s.grid.dx
    if end is End.RIGHT:
        vals = 2.0 * (s.values[:, -2] - s.values[:, -1]) / dx2
    else:
        vals = 2.0 * (s.values[:, 1] - s.values[:, 0]) / dx2
    return TimeSeries(s.timegrid, vals)


def final_profile(s: StateHistory) -> ScalarField:
    return ScalarField(s.grid, s.values[-1].copy())


def trace_at(s: StateHistory, end: End) -> TimeSeries:
    col = 0 if end is End.LEFT else -1
    return TimeSeries(s.timegrid, s.values[:, col].copy())


def write_state_csv(s: StateHistory, path) -> None:
    """Debug dump: one row per time level, metadata in the header line."""
    with open(path, "w", newline="\n") as fh:
        fh.write(
            f"# L={s.grid.length!r} T={s.timegrid.horizon!r} "
            f"n_cells={s.grid.n_cells} n_steps={s.timegrid.n_steps}\n"
        )
        for row in s.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
