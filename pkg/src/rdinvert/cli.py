"""Command-line front end.

    rd-invert <forward|synth|invert|svd|sweep> --config <path>
              [--out <dir>] [--jobs N] [--verbose]

Exit codes: 0 success, 2 configuration error, 3 forward-solver failure,
4 data-condition failure, 5 inversion failure.  The environment variable
RD_INVERT_SEED overrides the config seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .errors import (
    BlowUpError,
    ConfigurationError,
    DataConditionError,
    RdInvertError,
    ReconstructionError,
    SmoothingError,
    StiffnessError,
)
from .experiments import (
    load_config,
    run_forward,
    run_invert,
    run_svd,
    run_sweep,
    run_synth,
    write_invert_outputs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_DATA = 4
EXIT_INVERSION = 5


def _apply_seed_override(config: dict) -> None:
    seed = os.environ.get("RD_INVERT_SEED")
    if seed is None:
        return
    try:
        value = int(seed)
    except ValueError as exc:
        raise ConfigurationError(f"RD_INVERT_SEED must be an integer, got {seed!r}") from exc
    config.setdefault("noise", {})["seed"] = value
    if "synth" in config:
        config["synth"].setdefault("noise", {})["seed"] = value


def _cmd_forward(config: dict, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    summary = run_forward(config, out_dir)
    runtime = time.perf_counter() - t0
    print(
        f"forward: final sup-norm {summary['final_sup_norm']:.6g}, "
        f"mass drift {summary['mass_drift']:.3e}, runtime {runtime:.2f}s"
    )
    return EXIT_OK


def _cmd_synth(config: dict, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    out = run_synth(config, out_dir)
    runtime = time.perf_counter() - t0
    cond = out.manifest["conditions"]
    print(
        f"synth: wrote {len(out.samples)} dataset(s) to {out_dir}, "
        f"min g' {cond['min_gu_prime']}, kappa {cond['kappa_estimate']}, "
        f"min |h'| {cond['min_abs_h_dot']}, runtime {runtime:.2f}s"
    )
    for warning in cond["warnings"]:
        print(f"synth warning: {warning}")
    return EXIT_OK


def _cmd_invert(config: dict, out_dir: Path, args) -> int:
    manifest_path = config.get("manifest")
    if manifest_path is None:
        raise ConfigurationError("invert config needs a 'manifest' path")
    manifest_path = Path(manifest_path)
    if not manifest_path.is_absolute():
        manifest_path = Path(config.get("_config_dir", ".")) / manifest_path
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    t0 = time.perf_counter()
    out = run_invert(manifest, config, data_dir=manifest_path.parent)
    runtime = time.perf_counter() - t0
    write_invert_outputs(
        out, out_dir, config.get("output_prefix", "recon"),
        config.get("truth"), manifest.get("bindings"),
    )
    line = (
        f"invert: {out.summary['scheme']} finished after "
        f"{out.summary['iterations']} iteration(s), "
        f"misfit_g {out.summary['final_misfit_g']:.3e}, "
        f"misfit_h {out.summary['final_misfit_h']:.3e}"
    )
    if "error_a" in out.summary:
        line += (
            f", error_a {out.summary['error_a']:.3%}, "
            f"error_f {out.summary['error_f']:.3%}"
        )
    print(line + f", runtime {runtime:.2f}s")
    return EXIT_OK


def _cmd_svd(config: dict, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    summary = run_svd(config, out_dir)
    runtime = time.perf_counter() - t0
    print(
        f"svd: sigma1(a)/sigma1(q) = {summary['sigma1_ratio']:.3f} "
        f"(a {summary['sigma1_a']:.3e}, q {summary['sigma1_q']:.3e}), "
        f"runtime {runtime:.2f}s"
    )
    return EXIT_OK


def _cmd_sweep(config: dict, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    records = run_sweep(config, out_dir, jobs=args.jobs)
    runtime = time.perf_counter() - t0
    ok = sum(1 for r in records if r["status"] == "ok")
    for rec in records:
        if rec["status"] != "ok":
            print(f"sweep point {rec['value']} failed: {rec.get('message', '')}")
    print(f"sweep: {ok}/{len(records)} run(s) succeeded, runtime {runtime:.2f}s")
    return EXIT_OK if ok >= 1 else EXIT_INVERSION


_COMMANDS = {
    "forward": _cmd_forward,
    "synth": _cmd_synth,
    "invert": _cmd_invert,
    "svd": _cmd_svd,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rd-invert", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output directory (default: config directory)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        config["_config_dir"] = str(Path(args.config).resolve().parent)
        _apply_seed_override(config)
        out_dir = Path(args.out) if args.out is not None else Path(config["_config_dir"])
        return _COMMANDS[args.command](config, out_dir, args)
    except (BlowUpError, StiffnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataConditionError, SmoothingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ReconstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVERSION
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RdInvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVERSION


if __name__ == "__main__":
    sys.exit(main())
