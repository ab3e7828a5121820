"""Config-driven experiment orchestration and CSV artifact writing.

Configs are single JSON documents.  Ground truths and problem data enter
as expression strings over a tiny arithmetic grammar, so experiments
live entirely in configs.  The synthesis manifest records everything a
later inversion needs except the ground truth, which keeps blind
inversions honest.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, DataConditionError, RdInvertError
from .expressions import parse_expression
from .grids import (
    ScalarField,
    SpatialGrid,
    TimeGrid,
    TimeSeries,
    make_time_grid,
    make_uniform_grid,
    trapezoid_mass,
)
from .inversion import (
    ConditionReport,
    ReconstructionHistory,
    Scheme,
    SchemeConfig,
    check_conditions,
    relative_l2,
    run_reconstruction,
)
from .observations import (
    LambdaRule,
    NoiseDistribution,
    NoiseSpec,
    ObservationSet,
    PenaltyOrder,
    SmoothingSpec,
    read_observation_csv,
    sample_and_perturb,
    smooth_to_grid,
    write_observation_csv,
)
from .problem import BoundaryCondition, End, ProblemSkeleton, ProblemSpec
from .reaction import ReactionCurve
from .sensitivity import (
    ObservationKind,
    PerturbationMode,
    SensitivitySetup,
    jacobian_singular_values,
)
from .solver import final_profile, solve_forward, trace_at, write_state_csv


def _fmt(value: float) -> str:
    return repr(float(value))


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot load config {path}: {exc}") from exc


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigurationError(f"missing {key!r} in {where} config")
    return cfg[key]


def _compile(text: str, variables: Tuple[str, ...], bindings: Optional[dict] = None):
    bindings = dict(bindings or {})
    expr = parse_expression(str(text), variables + tuple(bindings))
    return expr, bindings


def make_space_fn(text: str, bindings=None) -> Callable[[np.ndarray], np.ndarray]:
    expr, consts = _compile(text, ("x",), bindings)
    return lambda x: np.broadcast_to(np.asarray(expr(x=x, **consts), dtype=float), np.shape(x)).copy()


def make_state_fn(text: str, bindings=None) -> Callable[[np.ndarray], np.ndarray]:
    expr, consts = _compile(text, ("u",), bindings)
    return lambda u: np.broadcast_to(np.asarray(expr(u=u, **consts), dtype=float), np.shape(u)).copy()


def make_time_fn(text: str, bindings=None):
    """Compiled b(t); constants collapse to a plain float."""
    expr, consts = _compile(text, ("t",), bindings)
    if expr.is_constant:
        return expr.constant_value()
    return lambda t: float(expr(t=t, **consts))


def make_forcing_fn(text: str, bindings=None):
    expr, consts = _compile(text, ("x", "t"), bindings)
    return lambda x, t: np.broadcast_to(np.asarray(expr(x=x, t=t, **consts), dtype=float), np.shape(x)).copy()


def build_grid(cfg: dict) -> SpatialGrid:
    return make_uniform_grid(float(_require(cfg, "length", "grid")), int(_require(cfg, "n_cells", "grid")))


def build_timegrid(cfg: dict) -> TimeGrid:
    return make_time_grid(float(_require(cfg, "horizon", "time")), int(_require(cfg, "n_steps", "time")))


def build_bc(cfg: dict, bindings=None) -> BoundaryCondition:
    kind = str(_require(cfg, "kind", "boundary")).lower()
    value = cfg.get("value", "0")
    rhs = make_time_fn(value, bindings)
    if kind == "dirichlet":
        return BoundaryCondition.dirichlet(rhs)
    if kind == "neumann":
        return BoundaryCondition.neumann(rhs)
    if kind == "impedance":
        return BoundaryCondition.impedance(float(cfg.get("gamma", 0.0)), rhs)
    raise ConfigurationError(f"unknown boundary kind {kind!r}")


def build_truth(cfg: dict, grid: SpatialGrid, bindings=None):
    """Ground-truth coefficient field, reaction curve, and callables."""
    a_fn = make_space_fn(_require(cfg, "a", "truth"), bindings)
    f_fn = make_state_fn(_require(cfg, "f", "truth"), bindings)
    lo, hi = cfg.get("f_domain", [-1.0, 2.0])
    n_knots = int(cfg.get("f_knots", 801))
    a_field = ScalarField.from_function(grid, a_fn)
    f_curve = ReactionCurve.from_function(f_fn, float(lo), float(hi), n_knots)
    return a_field, f_curve, a_fn, f_fn


def build_skeleton(run_cfg: dict, grid: SpatialGrid, timegrid: TimeGrid, bindings=None) -> ProblemSkeleton:
    return ProblemSkeleton(
        grid=grid,
        timegrid=timegrid,
        r=make_forcing_fn(run_cfg.get("r", "0"), bindings),
        u0=ScalarField.from_function(grid, make_space_fn(run_cfg.get("u0", "0"), bindings)),
        bc_left=build_bc(_require(run_cfg, "bc_left", "run"), bindings),
        bc_right=build_bc(_require(run_cfg, "bc_right", "run"), bindings),
    )


def scheme_config_from(scheme_name: str, overrides: Optional[dict] = None) -> SchemeConfig:
    try:
        scheme = Scheme(str(scheme_name))
    except ValueError as exc:
        raise ConfigurationError(f"unknown scheme {scheme_name!r}") from exc
    kwargs = {"scheme": scheme}
    valid = set(SchemeConfig.__dataclass_fields__) - {"scheme"}
    for key, value in (overrides or {}).items():
        if key not in valid:
            raise ConfigurationError(f"unknown scheme_config key {key!r}")
        kwargs[key] = value
    return SchemeConfig(**kwargs)


def smoothing_spec_from(cfg: Optional[dict], noise_level: float, default_order: PenaltyOrder) -> SmoothingSpec:
    if cfg is None:
        return SmoothingSpec.default_for(noise_level, default_order)
    order = PenaltyOrder(str(cfg.get("order", default_order.value)).lower())
    rule = cfg.get("rule")
    if rule is None:
        rule = LambdaRule.DISCREPANCY if noise_level > 0.0 else LambdaRule.FIXED
    else:
        rule = LambdaRule(str(rule).lower())
    lam = float(cfg.get("lambda", 1e-8))
    return SmoothingSpec(order=order, lam=lam, lambda_rule=rule)


# ---------------------------------------------------------------------------
# forward command


def run_forward(config: dict, out_dir: Optional[Path]) -> dict:
    bindings = config.get("bindings")
    grid = build_grid(_require(config, "grid", "forward"))
    timegrid = build_timegrid(_require(config, "time", "forward"))
    lo, hi = config.get("f_domain", [-1.0, 2.0])
    f_curve = ReactionCurve.from_function(
        make_state_fn(config.get("f", "0"), bindings), float(lo), float(hi),
        int(config.get("f_knots", 801)),
    )
    problem = ProblemSpec(
        grid=grid,
        timegrid=timegrid,
        a=ScalarField.from_function(grid, make_space_fn(config.get("a", "1"), bindings)),
        f=f_curve,
        r=make_forcing_fn(config.get("r", "0"), bindings),
        u0=ScalarField.from_function(grid, make_space_fn(config.get("u0", "0"), bindings)),
        bc_left=build_bc(_require(config, "bc_left", "forward"), bindings),
        bc_right=build_bc(_require(config, "bc_right", "forward"), bindings),
    )
    state = solve_forward(problem)
    mass0 = trapezoid_mass(state.values[0], grid.dx)
    mass_end = trapezoid_mass(state.values[-1], grid.dx)
    summary = {
        "final_sup_norm": float(np.max(np.abs(state.values[-1]))),
        "mass_initial": mass0,
        "mass_final": mass_end,
        "mass_drift": abs(mass_end - mass0),
    }
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_state_csv(state, out_dir / config.get("state_csv", "state.csv"))
    return summary


# ---------------------------------------------------------------------------
# synth command


@dataclass
class SynthOutputs:
    datasets: Dict[str, ObservationSet]
    samples: Dict[str, Tuple[str, np.ndarray, np.ndarray]]
    manifest: dict
    report: ConditionReport


_DATASET_ORDER = (("u", "g"), ("u", "h"), ("v", "g"), ("v", "h"))


def run_synth(config: dict, out_dir: Optional[Path]) -> SynthOutputs:
    bindings = config.get("bindings")
    grid = build_grid(_require(config, "grid", "synth"))
    timegrid = build_timegrid(_require(config, "time", "synth"))
    truth_cfg = _require(config, "truth", "synth")
    a_field, f_curve, a_fn, _ = build_truth(truth_cfg, grid, bindings)

    scheme_name = config.get("scheme", "final_plus_trace")
    overrides = dict(config.get("scheme_config", {}))
    if "a_anchor" not in overrides:
        overrides["a_anchor"] = float(a_fn(np.array([grid.length]))[0])
    cfg = scheme_config_from(scheme_name, overrides)

    sampling = config.get("sampling", {})
    n_x = int(sampling.get("n_x", 20))
    n_t = int(sampling.get("n_t", 25))
    noise_cfg = config.get("noise", {})
    level = float(noise_cfg.get("level", 0.0))
    dist = NoiseDistribution(str(noise_cfg.get("distribution", "uniform")).lower())
    seed = int(noise_cfg.get("seed", 0))

    smoothing_cfg = config.get("smoothing", {})
    g_spec = smoothing_spec_from(smoothing_cfg.get("g"), level, PenaltyOrder.H2)
    h_spec = smoothing_spec_from(smoothing_cfg.get("h"), level, PenaltyOrder.H1)

    runs_cfg = _require(config, "runs", "synth")
    datasets: Dict[str, ObservationSet] = {}
    samples: Dict[str, Tuple[str, np.ndarray, np.ndarray]] = {}
    manifest_runs: Dict[str, dict] = {}

    seed_offset = {pair: i for i, pair in enumerate(_DATASET_ORDER)}
    for run_name, run_cfg in runs_cfg.items():
        skel = build_skeleton(run_cfg, grid, timegrid, bindings)
        state = solve_forward(skel.with_coefficients(a_field, f_curve))
        observe = run_cfg.get("observe", ["g"])
        trace_end = run_cfg.get("trace_end", "right")
        g_obs = h_obs = None
        files = {}
        if "g" in observe:
            coords, vals = sample_and_perturb(
                final_profile(state), n_x,
                NoiseSpec(level, dist, seed + seed_offset[(run_name, "g")]),
            )
            g_obs = smooth_to_grid(vals, coords, grid, g_spec, level)
            name = f"g_{run_name}"
            samples[name] = ("g", coords, vals)
            files["g"] = f"{name}.csv"
        if "h" in observe:
            end = End.LEFT if trace_end == "left" else End.RIGHT
            coords, vals = sample_and_perturb(
                trace_at(state, end), n_t,
                NoiseSpec(level, dist, seed + seed_offset[(run_name, "h")]),
            )
            h_obs = smooth_to_grid(vals, coords, timegrid, h_spec, level)
            name = f"h_{run_name}"
            samples[name] = ("h", coords, vals)
            files["h"] = f"{name}.csv"
        datasets[run_name] = ObservationSet(
            g=g_obs, h=h_obs, trace_end=trace_end if h_obs is not None else None,
            n_x_samples=n_x, n_t_samples=n_t, noise_level=level, seed=seed,
        )
        manifest_runs[run_name] = {
            "r": run_cfg.get("r", "0"),
            "u0": run_cfg.get("u0", "0"),
            "bc_left": run_cfg["bc_left"],
            "bc_right": run_cfg["bc_right"],
            "trace_end": trace_end,
            "files": files,
        }

    g_u = datasets["u"].g if "u" in datasets else None
    g_v = datasets["v"].g if "v" in datasets else None
    h_u = datasets["u"].h if "u" in datasets else None
    report = check_conditions(g_u, g_v, h_u, cfg, trace_end=datasets["u"].trace_end or "right")

    manifest = {
        "grid": {"length": grid.length, "n_cells": grid.n_cells},
        "time": {"horizon": timegrid.horizon, "n_steps": timegrid.n_steps},
        "scheme": scheme_name,
        "scheme_config": overrides,
        "sampling": {"n_x": n_x, "n_t": n_t},
        "noise": {"level": level, "distribution": dist.value, "seed": seed},
        "smoothing": {
            "g": {"order": g_spec.order.value, "rule": g_spec.lambda_rule.value, "lambda": g_spec.lam},
            "h": {"order": h_spec.order.value, "rule": h_spec.lambda_rule.value, "lambda": h_spec.lam},
        },
        "runs": manifest_runs,
        "conditions": {
            "min_gu_prime": report.min_gu_prime,
            "min_gu_prime_interior": report.min_gu_prime_interior,
            "min_gv_prime": report.min_gv_prime,
            "min_abs_h_dot": report.min_abs_h_dot,
            "kappa_estimate": report.kappa_estimate,
            "warnings": report.warnings,
        },
    }
    if bindings:
        manifest["bindings"] = bindings

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, (kind, coords, vals) in samples.items():
            write_observation_csv(out_dir / f"{name}.csv", kind, coords, vals, level, seed)
        with open(out_dir / "manifest.json", "w", newline="\n") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return SynthOutputs(datasets=datasets, samples=samples, manifest=manifest, report=report)


# ---------------------------------------------------------------------------
# invert command


@dataclass
class InvertOutputs:
    history: ReconstructionHistory
    summary: dict


def _datasets_from_manifest(manifest: dict, data_dir: Path) -> Dict[str, ObservationSet]:
    grid = build_grid(manifest["grid"])
    timegrid = build_timegrid(manifest["time"])
    noise = manifest["noise"]
    level = float(noise["level"])
    g_spec = smoothing_spec_from(manifest["smoothing"]["g"], level, PenaltyOrder.H2)
    h_spec = smoothing_spec_from(manifest["smoothing"]["h"], level, PenaltyOrder.H1)
    datasets = {}
    for run_name, run_cfg in manifest["runs"].items():
        g_obs = h_obs = None
        files = run_cfg["files"]
        if "g" in files:
            _, _, _, coords, vals = read_observation_csv(data_dir / files["g"])
            g_obs = smooth_to_grid(vals, coords, grid, g_spec, level)
        if "h" in files:
            _, _, _, coords, vals = read_observation_csv(data_dir / files["h"])
            h_obs = smooth_to_grid(vals, coords, timegrid, h_spec, level)
        datasets[run_name] = ObservationSet(
            g=g_obs, h=h_obs,
            trace_end=run_cfg.get("trace_end") if h_obs is not None else None,
            n_x_samples=int(manifest["sampling"]["n_x"]),
            n_t_samples=int(manifest["sampling"]["n_t"]),
            noise_level=level, seed=int(noise["seed"]),
        )
    return datasets


def reaction_error(curve: ReactionCurve, f_true: Callable[[np.ndarray], np.ndarray], interior_frac: float = 0.8) -> float:
    """Relative L2 error of the curve on the central part of its domain."""
    span = curve.j_hi - curve.j_lo
    margin = 0.5 * (1.0 - interior_frac) * span
    mask = (curve.knots >= curve.j_lo + margin) & (curve.knots <= curve.j_hi - margin)
    return relative_l2(curve.nodal_values[mask], np.asarray(f_true(curve.knots[mask]), dtype=float))


def run_invert(
    manifest: dict,
    invert_cfg: dict,
    datasets: Optional[Dict[str, ObservationSet]] = None,
    data_dir: Optional[Path] = None,
) -> InvertOutputs:
    bindings = manifest.get("bindings")
    grid = build_grid(manifest["grid"])
    timegrid = build_timegrid(manifest["time"])
    if datasets is None:
        if data_dir is None:
            raise ConfigurationError("invert needs in-memory datasets or a data directory")
        datasets = _datasets_from_manifest(manifest, data_dir)

    overrides = dict(manifest.get("scheme_config", {}))
    overrides.update(invert_cfg.get("scheme_config", {}))
    cfg = scheme_config_from(manifest["scheme"], overrides)

    skeletons = {
        name: build_skeleton(run_cfg, grid, timegrid, bindings)
        for name, run_cfg in manifest["runs"].items()
    }
    a0 = ScalarField.from_function(grid, make_space_fn(invert_cfg.get("a0", "1"), bindings))
    f0 = make_state_fn(invert_cfg.get("f0", "0"), bindings)

    history = run_reconstruction(
        datasets["u"], skeletons["u"], cfg, a0, f0,
        data_v=datasets.get("v"), skel_v=skeletons.get("v"),
    )

    summary = {
        "scheme": manifest["scheme"],
        "iterations": history.records[-1].k,
        "converged": history.converged,
        "final_misfit_g": history.records[-1].misfit_g,
        "final_misfit_h": history.records[-1].misfit_h,
        "total_clamp_events": history.total_clamp_events,
    }
    truth_cfg = invert_cfg.get("truth")
    if truth_cfg is not None:
        a_fn = make_space_fn(truth_cfg["a"], bindings)
        f_fn = make_state_fn(truth_cfg["f"], bindings)
        summary["error_a"] = relative_l2(history.a_final.values, a_fn(grid.nodes))
        summary["error_f"] = reaction_error(history.f_final, f_fn)
    return InvertOutputs(history=history, summary=summary)


def write_invert_outputs(out: InvertOutputs, out_dir: Path, prefix: str, truth: Optional[dict], bindings=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    hist_path = out_dir / f"{prefix}_history.csv"
    with open(hist_path, "w", newline="\n") as fh:
        fh.write("k,misfit_g,misfit_h,da_sup,df_sup,clamp_events\n")
        for rec in out.history.records:
            fh.write(
                f"{rec.k},{_fmt(rec.misfit_g)},{_fmt(rec.misfit_h)},"
                f"{_fmt(rec.da_sup)},{_fmt(rec.df_sup)},{rec.clamp_events}\n"
            )
    a_final = out.history.a_final
    f_final = out.history.f_final
    a_fn = f_fn = None
    if truth is not None:
        a_fn = make_space_fn(truth["a"], bindings)
        f_fn = make_state_fn(truth["f"], bindings)
    with open(out_dir / f"{prefix}_a.csv", "w", newline="\n") as fh:
        fh.write("x,a,a_true\n" if a_fn else "x,a\n")
        a_true = a_fn(a_final.grid.nodes) if a_fn else None
        for i, x in enumerate(a_final.grid.nodes):
            row = f"{_fmt(x)},{_fmt(a_final.values[i])}"
            if a_true is not None:
                row += f",{_fmt(a_true[i])}"
            fh.write(row + "\n")
    with open(out_dir / f"{prefix}_f.csv", "w", newline="\n") as fh:
        fh.write("u,f,f_true\n" if f_fn else "u,f\n")
        f_true = f_fn(f_final.knots) if f_fn else None
        for i, u in enumerate(f_final.knots):
            row = f"{_fmt(u)},{_fmt(f_final.nodal_values[i])}"
            if f_true is not None:
                row += f",{_fmt(f_true[i])}"
            fh.write(row + "\n")
    with open(out_dir / f"{prefix}_summary.json", "w", newline="\n") as fh:
        json.dump(out.summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# svd command


def run_svd(config: dict, out_dir: Optional[Path]) -> dict:
    time_cfg = config.get("time", {})
    setup = SensitivitySetup(
        n_cells=int(config.get("n_cells", 200)),
        n_steps=int(time_cfg.get("n_steps", 100)),
        horizon=float(time_cfg.get("horizon", 1.0)),
        n_modes=int(config.get("n_modes", 20)),
        observation=ObservationKind(str(config.get("observation", "value"))),
        weighted=bool(config.get("weighted", True)),
    )
    step_list = [int(v) for v in config.get("n_steps_compare", [setup.n_steps])]
    results: Dict[Tuple[str, int], np.ndarray] = {}
    for n_steps in step_list:
        for mode in (PerturbationMode.DIFFUSION_A, PerturbationMode.POTENTIAL_Q):
            results[(mode.value, n_steps)] = jacobian_singular_values(setup, mode, n_steps)

    base = step_list[0]
    sigma_a = results[("diffusion_a", base)]
    sigma_q = results[("potential_q", base)]
    summary = {
        "sigma1_ratio": float(sigma_a[0] / sigma_q[0]),
        "sigma1_a": float(sigma_a[0]),
        "sigma1_q": float(sigma_q[0]),
        "n_steps": step_list,
    }

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for (mode, n_steps), sigma in sorted(results.items()):
            with open(out_dir / f"sv_{mode}_nsteps{n_steps}.csv", "w", newline="\n") as fh:
                fh.write("n,sigma,log10_sigma\n")
                for i, s in enumerate(sigma, start=1):
                    fh.write(f"{i},{_fmt(s)},{_fmt(math.log10(s))}\n")
        for n_steps in step_list:
            sa = results[("diffusion_a", n_steps)]
            sq = results[("potential_q", n_steps)]
            with open(out_dir / f"sv_combined_nsteps{n_steps}.csv", "w", newline="\n") as fh:
                fh.write("n,sigma_a,log10_sigma_a,sigma_q,log10_sigma_q\n")
                for i in range(sa.size):
                    fh.write(
                        f"{i + 1},{_fmt(sa[i])},{_fmt(math.log10(sa[i]))},"
                        f"{_fmt(sq[i])},{_fmt(math.log10(sq[i]))}\n"
                    )
        with open(out_dir / "sv_summary.json", "w", newline="\n") as fh:
            json.dump(summary, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return summary


# ---------------------------------------------------------------------------
# sweep command

_SWEEP_PARAMS = ("beta", "noise_level", "n_x_samples", "n_t_samples")


def _sweep_point(payload) -> dict:
    synth_cfg, invert_cfg, param, value = payload
    synth_cfg = json.loads(json.dumps(synth_cfg))
    if param == "beta":
        bindings = dict(synth_cfg.get("bindings", {}))
        bindings["beta"] = float(value)
        synth_cfg["bindings"] = bindings
    elif param == "noise_level":
        synth_cfg.setdefault("noise", {})["level"] = float(value)
    elif param == "n_x_samples":
        synth_cfg.setdefault("sampling", {})["n_x"] = int(value)
    elif param == "n_t_samples":
        synth_cfg.setdefault("sampling", {})["n_t"] = int(value)
    record = {"param": param, "value": value, "status": "ok"}
    try:
        synth = run_synth(synth_cfg, out_dir=None)
        local_invert = dict(invert_cfg)
        local_invert.setdefault("truth", synth_cfg.get("truth"))
        out = run_invert(synth.manifest, local_invert, datasets=synth.datasets)
        record.update(
            error_a=out.summary.get("error_a", float("nan")),
            error_f=out.summary.get("error_f", float("nan")),
            iterations=out.summary["iterations"],
            clamp_events=out.summary["total_clamp_events"],
        )
    except RdInvertError as exc:
        # a run that aborts has effectively unbounded reconstruction error
        record.update(
            status="failed",
            error_a=float("inf"),
            error_f=float("inf"),
            iterations=0,
            clamp_events=0,
            message=str(exc),
        )
    return record


def run_sweep(config: dict, out_dir: Optional[Path], jobs: int = 1) -> List[dict]:
    synth_cfg = _require(config, "synth", "sweep")
    invert_cfg = config.get("invert", {})
    axis = _require(config, "axis", "sweep")
    param = str(_require(axis, "param", "sweep axis"))
    if param not in _SWEEP_PARAMS:
        raise ConfigurationError(f"sweep parameter must be one of {_SWEEP_PARAMS}")
    values = list(_require(axis, "values", "sweep axis"))
    payloads = [(synth_cfg, invert_cfg, param, v) for v in values]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_sweep_point, payloads))
    else:
        records = [_sweep_point(p) for p in payloads]

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", newline="\n") as fh:
            fh.write(f"{param},status,error_a,error_f,iterations,clamp_events\n")
            for rec in records:
                fh.write(
                    f"{_fmt(rec['value'])},{rec['status']},{_fmt(rec['error_a'])},"
                    f"{_fmt(rec['error_f'])},{rec['iterations']},{rec['clamp_events']}\n"
                )
    return records
