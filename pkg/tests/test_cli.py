import csv
import json
import math

import numpy as np
import pytest

from steparb.cli import config_hash, load_config, main
from steparb.errors import ConfigError


@pytest.fixture()
def ref_config_dict():
    return {
        "market": {"mu1": 0.08, "mu2": 0.02, "sigma1": 0.02, "sigma2": 0.1, "r": 0.0},
        "contract": {
            "strike": 20.0,
            "maturity": 0.25,
            "s_minus": 0.1,
            "s_plus": 100.0,
            "alpha1": 1.0,
            "alpha2": 1.0,
        },
        "grid": {"n_intervals": 100},
        "solver": {"dt": 2e-4, "picard_tol": 4e-9, "picard_max": 50, "snapshot_stride": 250},
        "mc": {"n_paths": 20, "n_steps": 16, "seed": 7, "s1_0": 20.0, "s2_0": 1.0},
        "smile": {
            "spot": 90.0,
            "strikes": [76.0, 82.0, 88.0, 94.0],
            "maturities": [0.08333333333333333, 0.25],
        },
        "output_dir": "out",
    }


@pytest.fixture()
def config_path(tmp_path, ref_config_dict):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(ref_config_dict))
    return path


def run(args):
    return main([str(a) for a in args])


def test_constants_command(tmp_path, config_path, ref_config_dict, capsys):
    out = tmp_path / "res"
    assert run(["constants", "--config", config_path, "--out", out]) == 0
    payload = json.loads((out / "constants.json").read_text())
    assert payload["A"] == pytest.approx(40.0)
    assert payload["B"] == pytest.approx(80.0)
    assert payload["eps"] == pytest.approx(0.02 / math.sqrt(2))
    assert payload["config_hash"] == config_hash(ref_config_dict)
    printed = json.loads(capsys.readouterr().out)
    assert printed == payload


def test_constants_shift_vanishes_at_special_rate(tmp_path, ref_config_dict):
    ref_config_dict["market"]["r"] = 0.5 * 0.02**2
    path = tmp_path / "c.json"
    path.write_text(json.dumps(ref_config_dict))
    out = tmp_path / "res"
    assert run(["constants", "--config", path, "--out", out]) == 0
    payload = json.loads((out / "constants.json").read_text())
    assert payload["c1"] == pytest.approx(0.0, abs=1e-15)


def test_solve_command_writes_surface_and_summary(tmp_path, config_path, ref_config_dict):
    out = tmp_path / "res"
    assert run(["solve", "--config", config_path, "--out", out]) == 0
    lines = (out / "surface.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash={config_hash(ref_config_dict)}"
    assert lines[1] == "tau,node_index,y1,u"
    rows = list(csv.DictReader(lines[1:]))
    n_nodes = 101
    assert len(rows) % n_nodes == 0
    # boundary rows carry the Dirichlet data at every stored level
    for row in rows:
        if row["node_index"] == "0":
            assert float(row["u"]) == 0.0
        if row["node_index"] == "100":
            assert float(row["u"]) == pytest.approx(80.0)
    summary = json.loads((out / "solve_summary.json").read_text())
    assert summary["final_tau"] == pytest.approx(0.25)
    assert summary["final_max"] == pytest.approx(80.0, rel=1e-6)
    assert summary["final_min"] == pytest.approx(0.0, abs=1e-9)


def test_solve_classical_flag(tmp_path, config_path):
    out = tmp_path / "res"
    assert run(["solve", "--config", config_path, "--out", out, "--classical"]) == 0
    assert json.loads((out / "solve_summary.json").read_text())["classical"] is True


def test_bad_config_aggregates_and_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"market": {"mu1": 0.1}, "contract": {"strike": -3}}))
    assert run(["constants", "--config", path]) == 2
    err = capsys.readouterr().err
    # several independent problems reported at once
    assert "mu2" in err and "sigma1" in err and "maturity" in err


def test_numerical_failure_exits_3(tmp_path, ref_config_dict, capsys):
    ref_config_dict["solver"] = {"dt": 0.05, "picard_tol": 1e-12, "picard_max": 1}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(ref_config_dict))
    assert run(["solve", "--config", path, "--out", tmp_path / "res"]) == 3
    assert "PICARD_DIVERGED" in capsys.readouterr().err


def test_csls_check_command(tmp_path, config_path):
    out = tmp_path / "res"
    assert run(["csls-check", "--config", config_path, "--out", out]) == 0
    report = json.loads((out / "csls_report.json").read_text())
    assert report["all_passed"] is True
    assert report["conditions"]["A2"]["degenerate"] is True
    assert report["initial_profile"] == "ramp"
    mid = 0.5 * (math.log(0.1) + math.log(100.0))
    assert abs(report["x0_observed"] - mid) < 0.069 + 10 * 0.0141422
    assert report["sup_error_left"] <= 0.05 * 40.0
    assert report["sup_error_right"] <= 0.05 * 40.0


def test_hedge_sim_command(tmp_path, config_path):
    out = tmp_path / "res"
    assert run(["hedge-sim", "--config", config_path, "--out", out, "--ledger"]) == 0
    payload = json.loads((out / "hedge_sim.json").read_text())
    assert payload["n_paths"] == 20
    assert payload["initial_value"] < 2.0
    assert len(payload["tracking_error"]) == 20
    ledger = (out / "hedge_ledger.csv").read_text().splitlines()
    assert ledger[0] == "path,time,s1,s2,v,delta1,delta2,pi,tracking_increment"
    assert len(ledger) == 1 + 20 * 16


def test_hedge_sim_determinism(tmp_path, config_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["hedge-sim", "--config", config_path, "--out", out1]) == 0
    assert run(["hedge-sim", "--config", config_path, "--out", out2]) == 0
    assert (out1 / "hedge_sim.json").read_text() == (out2 / "hedge_sim.json").read_text()


def test_smile_command(tmp_path, config_path, ref_config_dict):
    out = tmp_path / "res"
    assert run(["smile", "--config", config_path, "--out", out]) == 0
    summary = json.loads((out / "smile_summary.json").read_text())
    assert len(summary["curves"]) == 2
    for entry in summary["curves"]:
        lines = (out / entry["file"]).read_text().splitlines()
        assert lines[0] == f"# config_hash={config_hash(ref_config_dict)}"
        assert lines[2] == "strike,price_classical,price_arbitrage,implied_vol,vol_status"
        assert len(lines) == 3 + 4


def test_smile_requires_config_section(tmp_path, ref_config_dict):
    del ref_config_dict["smile"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(ref_config_dict))
    assert run(["smile", "--config", path, "--out", tmp_path / "res"]) == 2


def test_bs_price_and_delta(capsys):
    assert run(["bs", "--spot", 100, "--strike", 100, "--tau", 1.0, "--sigma", 0.2]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["price"] == pytest.approx(7.9656, abs=1e-4)
    assert 0.5 < payload["delta"] < 0.6


def test_bs_implied_vol(capsys):
    assert run(["bs", "--spot", 100, "--strike", 100, "--tau", 1.0, "--price", 7.965567]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["implied_vol"] == pytest.approx(0.2, abs=1e-4)


def test_bs_out_of_bounds_price_is_numerical_failure(capsys):
    assert run(["bs", "--spot", 100, "--strike", 100, "--tau", 1.0, "--price", 150.0]) == 3
    assert "NO_SOLUTION" in capsys.readouterr().err


def test_constants_idempotent(tmp_path, config_path):
    out = tmp_path / "res"
    assert run(["constants", "--config", config_path, "--out", out]) == 0
    first = (out / "constants.json").read_bytes()
    assert run(["constants", "--config", config_path, "--out", out]) == 0
    assert (out / "constants.json").read_bytes() == first


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_refine_flag(tmp_path, config_path):
    out = tmp_path / "res"
    assert run(["solve", "--config", config_path, "--out", out, "--refine", 2]) == 0
    summary = json.loads((out / "solve_summary.json").read_text())
    assert summary["n_nodes"] == 201
    assert summary["dt"] == pytest.approx(1e-4)
