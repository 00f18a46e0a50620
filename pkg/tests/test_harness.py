import math

import numpy as np
import pytest

from ddsim.harness import (
    ExperimentConfig,
    PRESETS,
    build_config,
    build_points,
    build_sequence,
    compare_protocols,
    load_config,
    magic_omega,
    parse_config_text,
    run_experiment,
)
from ddsim.harness.config import EXPERIMENT_IDS
from ddsim.harness.runner import check_pulse_budget


def test_magic_omega_values():
    assert magic_omega(0.05) == pytest.approx(125.6637, abs=1e-4)
    assert magic_omega(0.1) == pytest.approx(62.83, abs=0.01)
    assert magic_omega(0.05, n=2) == pytest.approx(251.33, abs=0.01)
    with pytest.raises(ValueError):
        magic_omega(0.0)


def test_config_parse_roundtrip():
    text = """
    # comment
    config_version = 1
    experiment = custom
    seed = 42
    tau_c = inf
    omega_offsets = -2, -1, 0, 1, 2
    protocols = fe, uni_dd
    modified = true
    """
    values = parse_config_text(text)
    assert values["seed"] == 42
    assert math.isinf(values["tau_c"])
    assert values["omega_offsets"] == (-2.0, -1.0, 0.0, 1.0, 2.0)
    assert values["protocols"] == ("fe", "uni_dd")
    assert values["modified"] is True


def test_config_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("nonsense_key = 1")


def test_config_duplicate_key_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        parse_config_text("seed = 1\nseed = 2")


def test_config_bad_value_rejected():
    with pytest.raises(ValueError, match="bad value"):
        parse_config_text("seed = banana")


def test_config_version_and_ids_validated():
    with pytest.raises(ValueError):
        ExperimentConfig(config_version=2)
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="fig9")
    with pytest.raises(ValueError):
        ExperimentConfig(model="heisenberg")
    with pytest.raises(ValueError):
        ExperimentConfig(protocol="cpmg")


def test_all_presets_build_and_enumerate_points():
    for name in PRESETS:
        cfg = build_config({"experiment": name})
        pts = build_points(cfg)
        assert pts, name
        ids = [p["point_id"] for p in pts]
        assert len(ids) == len(set(ids)), f"duplicate point ids in {name}"
    assert set(PRESETS) | {"custom"} == set(EXPERIMENT_IDS)


def test_preset_point_shapes():
    fig2a = build_points(build_config({"experiment": "fig2a"}))
    assert [p["point_id"] for p in fig2a][:1] == ["fe"]
    assert len(fig2a) == 6  # fe + five detunings
    fig2b = build_points(build_config({"experiment": "fig2b"}))
    assert len(fig2b) == 62  # fe + 61 scan points
    s1 = build_points(build_config({"experiment": "s1"}))
    assert len(s1) == 9  # 3 correlation times x (fe, uni, hahn)
    s3 = build_points(build_config({"experiment": "s3"}))
    assert all(p["kind"] == "sweep" for p in s3)
    fig4 = build_points(build_config({"experiment": "fig4"}))
    assert len(fig4) == 7  # fe + (plain, modified) x three angles


def test_uniaxial_points_sit_on_magic_line():
    cfg = build_config({"experiment": "fig2a"})
    pts = build_points(cfg)
    om = magic_omega(cfg.tau)
    uni = [p for p in pts if p["protocol"] == "uni_dd"]
    offs = sorted(p["omega"] - om for p in uni)
    assert offs == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_budget_sequences_spend_budget():
    cfg = build_config({"experiment": "s3"})
    pts = build_points(cfg)
    check_pulse_budget(pts, cfg.record_dt)
    for p in pts:
        seqn, _ = build_sequence(p, cfg.record_dt, t=2.0)
        assert seqn.pulse_count == 210


def test_budget_mismatch_rejected():
    cfg = build_config({"experiment": "s3", "np_budget": 200, "cudd_n": 52})
    pts = [p for p in build_points(cfg) if p["protocol"] == "cudd"]
    with pytest.raises(ValueError, match="budget"):
        check_pulse_budget(pts, cfg.record_dt)


def test_sequence_coverage_of_horizon():
    p = {"protocol": "pdd", "tau": 0.05, "horizon": 10.0, "omega": 0.0,
         "epsilon": 0.0, "modified": False, "tau_c": math.inf, "kind": "traj",
         "t_grid": (), "n": 0, "np_budget": 0}
    seqn, om = build_sequence(p, 0.1)
    assert seqn.total_time == pytest.approx(10.0)
    assert om == 0.0


def _tiny_cfg(**over):
    base = dict(experiment="custom", model="bec", J=8.0, protocol="uni_dd",
                tau=0.05, horizon=2.0, realizations=2, seed=77, workers=1)
    base.update(over)
    return base


def test_run_experiment_csv_schema(tmp_path):
    out = str(tmp_path / "tiny.csv")
    path = run_experiment(build_config(_tiny_cfg(out=out)))
    lines = open(path).read().splitlines()
    assert lines[0] == "# ddsim-csv v1"
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "experiment,point_id,protocol,omega,tau,epsilon,tau_c,t,metric,value,r,seed"
    provenance = {ln[2:].split("=")[0] for ln in lines if ln.startswith("# ") and "=" in ln}
    assert {"experiment", "seed", "J", "tau", "scale"} <= provenance
    rows = [ln.split(",") for ln in lines if not ln.startswith("#")][1:]
    # t=0 row, 20 cycle rows, one crossing row
    assert len(rows) == 22
    assert rows[-1][8].startswith("T0.9")


def test_run_experiment_deterministic(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    run_experiment(build_config(_tiny_cfg(out=a)))
    run_experiment(build_config(_tiny_cfg(out=b)))
    assert open(a, "rb").read() == open(b, "rb").read()


def test_run_experiment_seed_changes_output(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    run_experiment(build_config(_tiny_cfg(out=a)))
    run_experiment(build_config(_tiny_cfg(out=b, seed=78)))
    va = [ln for ln in open(a) if not ln.startswith("#")]
    vb = [ln for ln in open(b) if not ln.startswith("#")]
    assert va != vb


def test_workers_do_not_change_bytes(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    cfgd = _tiny_cfg(protocols=("fe", "uni_dd", "pdd"), protocol="fe")
    run_experiment(build_config(dict(cfgd, out=a, workers=1)))
    run_experiment(build_config(dict(cfgd, out=b, workers=3)))
    assert open(a, "rb").read() == open(b, "rb").read()


def test_compare_protocols_single_reduces_to_run(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    run_experiment(build_config(_tiny_cfg(out=a)))
    compare_protocols(build_config(_tiny_cfg(out=b)))
    assert open(a, "rb").read() == open(b, "rb").read()


def test_load_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("experiment = fig2a\nseed = 5\n")
    values = load_config(str(p))
    cfg = build_config(values)
    assert cfg.experiment == "fig2a"
    assert cfg.seed == 5
    assert cfg.J == 100.0  # desk preset value enumerated


def test_resource_guard():
    cfg = build_config(dict(experiment="custom", model="qd", N=18, grid_nx=6,
                            grid_ny=3, protocol="fe", metric="fidelity"))
    with pytest.raises(ValueError, match="max_bath"):
        run_experiment(cfg, out="/tmp/never.csv")


def test_header_items_cover_all_fields():
    cfg = build_config({"experiment": "s3"})
    keys = {k for k, _ in cfg.header_items()}
    assert {"np_budget", "dipolar_scale", "t_grid", "seed", "experiment"} <= keys


def test_cli_entry_points(tmp_path, capsys):
    from ddsim.cli import main

    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "fig2a" in out and "s4" in out

    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "experiment = custom\nmodel = bec\nJ = 6\nprotocol = uni_dd\n"
        "tau = 0.05\nhorizon = 1.0\nrealizations = 2\n")
    outcsv = tmp_path / "out.csv"
    assert main(["run", "--config", str(cfgfile), "--seed", "9",
                 "--out", str(outcsv)]) == 0
    assert outcsv.exists()
    text = outcsv.read_text()
    assert "# seed=9" in text
