import json

import numpy as np
import pytest

from rdinvert.cli import main

from cases import flagship_synth_config


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return path


def _forward_cfg(**over):
    cfg = {
        "grid": {"length": 1.0, "n_cells": 100},
        "time": {"horizon": 0.1, "n_steps": 100},
        "a": "1",
        "f": "0",
        "r": "0",
        "u0": "sin(pi*x)",
        "bc_left": {"kind": "dirichlet", "value": "0"},
        "bc_right": {"kind": "dirichlet", "value": "0"},
    }
    cfg.update(over)
    return cfg


def test_forward_eigenmode_summary(tmp_path, capsys):
    cfg = _write(tmp_path, "fwd.json", _forward_cfg())
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    line = capsys.readouterr().out
    sup = float(line.split("final sup-norm ")[1].split(",")[0])
    assert sup == pytest.approx(np.exp(-np.pi**2 * 0.1), abs=5e-4)
    assert (tmp_path / "state.csv").exists()


def test_forward_constant_solution_mass_drift(tmp_path, capsys):
    cfg = _write(
        tmp_path, "fwd.json",
        _forward_cfg(
            u0="1",
            bc_left={"kind": "neumann", "value": "0"},
            bc_right={"kind": "neumann", "value": "0"},
        ),
    )
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    drift = float(capsys.readouterr().out.split("mass drift ")[1].split(",")[0])
    assert drift < 1e-10


def test_malformed_expression_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, "fwd.json", _forward_cfg(u0="sin("))
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "column 4" in capsys.readouterr().err


def test_synth_writes_requested_sample_counts(tmp_path):
    cfg = _write(tmp_path, "synth.json", flagship_synth_config())
    out = tmp_path / "run"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    g_rows = (out / "g_u.csv").read_text().splitlines()
    h_rows = (out / "h_u.csv").read_text().splitlines()
    assert len(g_rows) == 1 + 20
    assert len(h_rows) == 1 + 25
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["conditions"]["min_abs_h_dot"] is not None
    assert "a_anchor" in manifest["scheme_config"]


def test_synth_deterministic_across_reruns(tmp_path):
    cfg = _write(tmp_path, "synth.json", flagship_synth_config(noise=0.01))
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["synth", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["synth", "--config", str(cfg), "--out", str(out2)]) == 0
    for name in ("g_u.csv", "h_u.csv", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_synth_range_violation_exits_4(tmp_path):
    cfg = flagship_synth_config()
    cfg["scheme"] = "two_final_sequential"
    cfg["runs"]["u"] = {
        "r": "x", "u0": "0",
        "bc_left": {"kind": "dirichlet", "value": "0"},
        "bc_right": {"kind": "neumann", "value": "0.5*(1-exp(-20*t))"},
        "observe": ["g"],
    }
    # the second run sweeps a wider value range than the first
    cfg["runs"]["v"] = {
        "r": "3*x", "u0": "0",
        "bc_left": {"kind": "dirichlet", "value": "0"},
        "bc_right": {"kind": "neumann", "value": "1.5*(1-exp(-20*t))"},
        "observe": ["g"],
    }
    path = _write(tmp_path, "synth.json", cfg)
    assert main(["synth", "--config", str(path), "--out", str(tmp_path / "bad")]) == 4


def test_blind_invert_from_manifest(tmp_path, capsys):
    synth_cfg = _write(tmp_path, "synth.json", flagship_synth_config(max_outer=3))
    out = tmp_path / "run"
    assert main(["synth", "--config", str(synth_cfg), "--out", str(out)]) == 0
    # no ground truth anywhere in the invert inputs
    invert_cfg = _write(
        tmp_path, "invert.json",
        {"manifest": str(out / "manifest.json"), "a0": "1", "f0": "0"},
    )
    assert main(["invert", "--config", str(invert_cfg), "--out", str(out)]) == 0
    history = (out / "recon_history.csv").read_text().splitlines()
    assert history[0] == "k,misfit_g,misfit_h,da_sup,df_sup,clamp_events"
    assert len(history) == 1 + 4  # iterates 0..3
    assert (out / "recon_a.csv").read_text().splitlines()[0] == "x,a"
    assert (out / "recon_f.csv").read_text().splitlines()[0] == "u,f"


def test_invert_deterministic_and_truth_columns(tmp_path):
    synth_cfg = _write(tmp_path, "synth.json", flagship_synth_config(max_outer=2))
    out = tmp_path / "run"
    main(["synth", "--config", str(synth_cfg), "--out", str(out)])
    invert_cfg = _write(
        tmp_path, "invert.json",
        {
            "manifest": str(out / "manifest.json"),
            "a0": "1",
            "f0": "0",
            "truth": {"a": "0.7+0.3*sin(pi*x)", "f": "0.9*sin(1.3*u)"},
        },
    )
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["invert", "--config", str(invert_cfg), "--out", str(out1)]) == 0
    assert main(["invert", "--config", str(invert_cfg), "--out", str(out2)]) == 0
    for name in ("recon_history.csv", "recon_a.csv", "recon_f.csv", "recon_summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    assert (out1 / "recon_a.csv").read_text().splitlines()[0] == "x,a,a_true"


def test_seed_override_changes_noise(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "synth.json", flagship_synth_config(noise=0.01))
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    main(["synth", "--config", str(cfg), "--out", str(out1)])
    monkeypatch.setenv("RD_INVERT_SEED", "12345")
    main(["synth", "--config", str(cfg), "--out", str(out2)])
    assert (out1 / "g_u.csv").read_bytes() != (out2 / "g_u.csv").read_bytes()


def test_svd_single_mode(tmp_path, capsys):
    cfg = _write(
        tmp_path, "svd.json",
        {"n_modes": 1, "n_cells": 60, "time": {"horizon": 0.5, "n_steps": 40}},
    )
    out = tmp_path / "svd"
    assert main(["svd", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "sv_potential_q_nsteps40.csv").read_text().splitlines()
    assert rows[0] == "n,sigma,log10_sigma"
    assert len(rows) == 2
    assert float(rows[1].split(",")[1]) > 0.0
    combined = (out / "sv_combined_nsteps40.csv").read_text().splitlines()
    assert combined[0] == "n,sigma_a,log10_sigma_a,sigma_q,log10_sigma_q"


def test_sweep_continues_past_failures(tmp_path, capsys):
    synth = flagship_synth_config(n_x=24, n_t=24, max_outer=2)
    synth["runs"]["u"]["u0"] = "beta*x^2*(1-x)^2"
    synth["bindings"] = {"beta": 0.0}
    cfg = _write(
        tmp_path, "sweep.json",
        {
            "synth": synth,
            "invert": {"a0": "1", "f0": "0"},
            "axis": {"param": "beta", "values": [0.0, 50.0]},
        },
    )
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("beta,status,")
    assert len(rows) == 3
    assert "ok" in rows[1]
    assert "failed" in rows[2]


def test_noise_sweep_reports_levels(tmp_path):
    synth = flagship_synth_config(max_outer=2)
    cfg = _write(
        tmp_path, "sweep.json",
        {
            "synth": synth,
            "invert": {"a0": "1", "f0": "0"},
            "axis": {"param": "noise_level", "values": [0.0, 0.005, 0.01]},
        },
    )
    out = tmp_path / "nsweep"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert len(rows) == 4
    errs = [float(r.split(",")[2]) for r in rows[1:]]
    assert all(np.isfinite(errs))
