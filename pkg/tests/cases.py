"""Shared experiment configurations used across the test modules.

The trace-scheme configuration here is the repository's flagship run:
L = 1, T = 0.5, 20 spatial / 25 temporal samples, unit initial guess for
the coefficient and zero initial reaction guess.  Ground truths are
declared expressions, smooth and of modest amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import rdinvert as rd
from rdinvert.observations import ObservationSet

FLAGSHIP_TRUTH = {
    "a": "0.7+0.3*sin(pi*x)",
    "f": "0.9*sin(1.3*u)",
    "f_domain": [-0.3, 2.2],
}

FLAGSHIP_A = lambda x: 0.7 + 0.3 * np.sin(np.pi * x)  # noqa: E731
FLAGSHIP_F = lambda u: 0.9 * np.sin(1.3 * u)  # noqa: E731


def flagship_synth_config(
    noise: float = 0.0,
    seed: int = 7,
    n_x: int = 20,
    n_t: int = 25,
    n_cells: int = 100,
    n_steps: int = 100,
    u0: str = "0",
    bindings=None,
    max_outer: int = 10,
):
    cfg = {
        "grid": {"length": 1.0, "n_cells": n_cells},
        "time": {"horizon": 0.5, "n_steps": n_steps},
        "truth": dict(FLAGSHIP_TRUTH),
        "runs": {
            "u": {
                "r": "1+2*x^2",
                "u0": u0,
                "bc_left": {"kind": "impedance", "gamma": 3.0, "value": "0"},
                "bc_right": {"kind": "neumann", "value": "0"},
                "observe": ["g", "h"],
                "trace_end": "right",
            }
        },
        "sampling": {"n_x": n_x, "n_t": n_t},
        "noise": {"level": noise, "distribution": "uniform", "seed": seed},
        "scheme": "final_plus_trace",
        "scheme_config": {"max_outer": max_outer},
    }
    if bindings:
        cfg["bindings"] = bindings
    return cfg


@dataclass
class TraceCase:
    """Same-grid (inverse-crime) data for the trace scheme."""

    grid: rd.SpatialGrid
    timegrid: rd.TimeGrid
    a_ex: rd.ScalarField
    f_ex: rd.ReactionCurve
    f_fn: object
    skeleton: rd.ProblemSkeleton
    solution: rd.StateHistory
    data: ObservationSet


def trace_case_samegrid(n: int = 100) -> TraceCase:
    grid = rd.make_uniform_grid(1.0, n)
    timegrid = rd.make_time_grid(0.5, n)
    a_ex = rd.ScalarField.from_function(grid, FLAGSHIP_A)
    f_ex = rd.ReactionCurve.from_function(FLAGSHIP_F, -0.3, 2.2, 801)
    skeleton = rd.ProblemSkeleton(
        grid=grid,
        timegrid=timegrid,
        r=lambda x, t: 1.0 + 2.0 * x**2,
        u0=rd.ScalarField.constant(grid, 0.0),
        bc_left=rd.BoundaryCondition.impedance(3.0, 0.0),
        bc_right=rd.BoundaryCondition.neumann(0.0),
    )
    solution = rd.solve_forward(skeleton.with_coefficients(a_ex, f_ex))
    data = ObservationSet(
        g=rd.final_profile(solution),
        h=rd.trace_at(solution, rd.End.RIGHT),
        trace_end="right",
        n_x_samples=n + 1,
        n_t_samples=n + 1,
        noise_level=0.0,
        seed=0,
    )
    return TraceCase(grid, timegrid, a_ex, f_ex, FLAGSHIP_F, skeleton, solution, data)


@dataclass
class TwoRunCase:
    """Same-grid data for the two-final-profile schemes.

    Both runs share a zero initial value and a pinned-zero left end; the
    right-end influx ramps smoothly from zero so the data stays
    compatible at t = 0 (an incompatible corner leaves an undamped
    ringing mode at the flux boundary under Crank-Nicolson).
    """

    grid: rd.SpatialGrid
    timegrid: rd.TimeGrid
    a_ex: rd.ScalarField
    f_ex: rd.ReactionCurve
    f_fn: object
    skel_u: rd.ProblemSkeleton
    skel_v: rd.ProblemSkeleton
    sol_u: rd.StateHistory
    sol_v: rd.StateHistory
    data_u: ObservationSet
    data_v: ObservationSet


TWORUN_A = lambda x: 1.0 + 0.25 * np.sin(np.pi * x)  # noqa: E731
TWORUN_F = lambda u: 0.5 * np.sin(np.pi * u)  # noqa: E731


def two_run_case(n: int = 100) -> TwoRunCase:
    grid = rd.make_uniform_grid(1.0, n)
    timegrid = rd.make_time_grid(0.5, n)
    a_ex = rd.ScalarField.from_function(grid, TWORUN_A)
    f_ex = rd.ReactionCurve.from_function(TWORUN_F, -0.3, 1.8, 801)
    skel_u = rd.ProblemSkeleton(
        grid=grid,
        timegrid=timegrid,
        r=lambda x, t: 3.0 * x**2,
        u0=rd.ScalarField.constant(grid, 0.0),
        bc_left=rd.BoundaryCondition.dirichlet(0.0),
        bc_right=rd.BoundaryCondition.neumann(lambda t: 1.2 * (1.0 - np.exp(-20.0 * t))),
    )
    skel_v = rd.ProblemSkeleton(
        grid=grid,
        timegrid=timegrid,
        r=lambda x, t: 0.5 * x + 0.3 * x**2,
        u0=rd.ScalarField.constant(grid, 0.0),
        bc_left=rd.BoundaryCondition.dirichlet(0.0),
        bc_right=rd.BoundaryCondition.neumann(lambda t: 0.35 * (1.0 - np.exp(-20.0 * t))),
    )
    sol_u = rd.solve_forward(skel_u.with_coefficients(a_ex, f_ex))
    sol_v = rd.solve_forward(skel_v.with_coefficients(a_ex, f_ex))
    mk = lambda sol: ObservationSet(  # noqa: E731
        g=rd.final_profile(sol),
        n_x_samples=n + 1,
        n_t_samples=n + 1,
        noise_level=0.0,
        seed=0,
    )
    return TwoRunCase(
        grid, timegrid, a_ex, f_ex, TWORUN_F,
        skel_u, skel_v, sol_u, sol_v, mk(sol_u), mk(sol_v),
    )


def manufactured_problem(n: int):
    """Exact solution u = e^{-t}(1 + x^2) with a = 1 + x and f(u) = u^2."""
    grid = rd.make_uniform_grid(1.0, n)
    timegrid = rd.make_time_grid(0.5, n)
    a = rd.ScalarField.from_function(grid, lambda x: 1.0 + x)
    f = rd.ReactionCurve.from_function(lambda u: u**2, 0.5, 2.2, 40 * n + 1)

    def forcing(x, t):
        return -np.exp(-t) * (3.0 + 4.0 * x + x**2) - np.exp(-2.0 * t) * (1.0 + x**2) ** 2

    problem = rd.ProblemSpec(
        grid=grid,
        timegrid=timegrid,
        a=a,
        f=f,
        r=forcing,
        u0=rd.ScalarField.from_function(grid, lambda x: 1.0 + x**2),
        bc_left=rd.BoundaryCondition.impedance(1.0, lambda t: np.exp(-t)),
        bc_right=rd.BoundaryCondition.impedance(1.0, lambda t: 6.0 * np.exp(-t)),
    )
    exact = lambda x, t: np.exp(-t) * (1.0 + x**2)  # noqa: E731
    return problem, exact


def manufactured_sup_error(n: int) -> float:
    problem, exact = manufactured_problem(n)
    state = rd.solve_forward(problem)
    err = 0.0
    for k, t in enumerate(problem.timegrid.times):
        err = max(err, float(np.max(np.abs(state.values[k] - exact(problem.grid.nodes, t)))))
    return err
