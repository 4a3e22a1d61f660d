from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from risisac.cli import SUBCOMMANDS, build_parser, main


def write_config(path, sweep="bs_power", values=(30,), gamma_dbm=0, M=4, trials=2):
    doc = {
        "system": {"K": 1, "N": 2, "M": M, "P_dbm": 30, "P_e_dbm": 0, "gamma_echo_dbm": gamma_dbm},
        "jbrd": {"max_outer": 4},
        "experiment": {"sweep": sweep, "values": list(values), "schemes": ["jbrd"], "antennas": [2],
                       "trials": trials, "seed_base": 0},
    }
    path.write_text(json.dumps(doc))
    return path


def read_rows(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def cfg(tmp_path):
    return write_config(tmp_path / "c.json")


def test_all_subcommands_registered():
    assert set(SUBCOMMANDS) == {"convergence", "sweep-power", "sweep-gamma", "sweep-pe", "sweep-m",
                                "sweep-ris-x", "oracle-check"}
    for name in SUBCOMMANDS:
        ns = build_parser().parse_args([name, "--out", "x", "--seed", "5", "--trials", "3"])
        assert ns.seed == 5 and ns.trials == 3


def test_sweep_power(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["sweep-power", "--config", str(cfg), "--out", str(out), "--seed", "3", "--trials", "1"]) == 0
    rows = read_rows(out / "sweep_power.csv")
    assert len(rows) == 1 and rows[0]["trial_count"] == "1" and rows[0]["seed_base"] == "3"


def test_subcommand_overrides_sweep(tmp_path):
    cfg = write_config(tmp_path / "c.json", gamma_dbm=-30)
    out = tmp_path / "o"
    assert main(["sweep-pe", "--config", str(cfg), "--out", str(out), "--trials", "1"]) == 0
    rows = read_rows(out / "sweep_pe.csv")
    assert [r["sweep_name"] for r in rows] == ["pe_power"] * 5
    assert [float(r["sweep_value"]) for r in rows] == [0, 5, 10, 15, 20]


def test_convergence_curves(cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    curves = read_rows(out / "convergence_curves.csv")
    assert curves and curves[0]["iteration"] == "1"
    assert len(list((out / "traces").glob("*.json"))) == 2


def test_deterministic_output(cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["sweep-power", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "sweep_power.csv").read_bytes() == (tmp_path / "b" / "sweep_power.csv").read_bytes()


def test_infeasible_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.json", gamma_dbm=120)
    assert main(["sweep-power", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert read_rows(tmp_path / "o" / "sweep_power.csv")[0]["infeasible_trials"] == "2"


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["sweep-power", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert main(["sweep-gamma", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "byte" in capsys.readouterr().err


@pytest.mark.parametrize("seed", ["-1", str(2**64), "abc"])
def test_bad_seed_rejected(seed, tmp_path):
    with pytest.raises(SystemExit) as ei:
        main(["sweep-m", "--out", str(tmp_path), "--seed", seed])
    assert ei.value.code != 0


def test_max_u64_seed_accepted():
    assert build_parser().parse_args(["sweep-m", "--out", "x", "--seed", str(2**64 - 1)]).seed == 2**64 - 1


@pytest.mark.slow
def test_oracle_check_single(cfg, tmp_path):
    out = tmp_path / "o"
    code = main(["oracle-check", "--config", str(cfg), "--out", str(out), "--seed", "10", "--trials", "1"])
    rows = read_rows(out / "oracle_check.csv")
    assert len(rows) == 1 and rows[0]["seed"] == "10"
    assert code == (0 if rows[0]["within_tolerance"] == "1" else 2)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "risisac", "sweep-power", "--config", str(tmp_path / "none.json"),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 1
