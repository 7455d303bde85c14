import json
from pathlib import Path

import pytest

from bbm_extremal.experiments import load_config, load_manifest, verify_manifest
from bbm_extremal.experiments.cli import main
from bbm_extremal.experiments.config import ConfigError

SMALL_BBM = ["--set", "engine.horizon=3", "--set", "engine.prune_gap=null"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_print_schema(capsys):
    code, out, _ = run(capsys, "--print-schema")
    assert code == 0
    assert "properties" in json.loads(out)


def test_empty_run(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate-bbm", "--replicas", "0", "--out", str(tmp_path))
    assert code == 0
    d = tmp_path / "simulate-bbm"
    m = load_manifest(d)
    assert m.status == "ok" and m.outputs
    assert verify_manifest(d)
    rows = (d / "maxima.csv").read_text().splitlines()
    assert len(rows) == 1  # header only
    assert json.loads(out)["status"] == "ok"


def test_verify_detects_changes(tmp_path, capsys):
    assert run(capsys, "simulate-bbm", "--replicas", "4", "--out", str(tmp_path), *SMALL_BBM)[0] == 0
    d = tmp_path / "simulate-bbm"
    assert verify_manifest(d)
    target = d / "maxima.csv"
    raw = bytearray(target.read_bytes())
    raw[-2] ^= 1
    target.write_bytes(bytes(raw))
    res = verify_manifest(d)
    assert not res and res.mismatched == ["maxima.csv"]
    (d / "summary.json").unlink()
    res = verify_manifest(d)
    assert "summary.json" in res.missing


def test_rerun_and_jobs_reproduce(tmp_path, capsys):
    sums = []
    for i, jobs in enumerate(["1", "1", "2"]):
        out = tmp_path / f"r{i}"
        assert run(capsys, "simulate-bbm", "--replicas", "12", "--seed", "5", "--jobs", jobs,
                   "--out", str(out), *SMALL_BBM)[0] == 0
        sums.append(load_manifest(out / "simulate-bbm").outputs)
    assert sums[0] == sums[1] == sums[2]


def test_no_staging_left_behind(tmp_path, capsys):
    run(capsys, "simulate-bbm", "--replicas", "2", "--out", str(tmp_path), *SMALL_BBM)
    assert not list((tmp_path / "simulate-bbm").glob(".staging-*"))


def test_unknown_key_is_an_error(tmp_path, capsys):
    code, _, err = run(capsys, "simulate-bbm", "--out", str(tmp_path), "--set", "engine.bogus=1")
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["status"] == "error" and rec["error"] == "ConfigError"
    assert json.loads((tmp_path / "simulate-bbm" / "error.json").read_text())["error"] == "ConfigError"
    with pytest.raises(ConfigError):
        load_config(None, ["nonsense.key=3"])


def test_config_file_and_flags(tmp_path):
    cfg_file = tmp_path / "exp.yaml"
    cfg_file.write_text("experiment: demo\nseed: 3\nengine:\n  horizon: 2.5\n")
    cfg = load_config(cfg_file, ["engine.horizon=4"], {"seed": 9})
    assert cfg["experiment"] == "demo" and cfg["seed"] == 9 and cfg["engine"]["horizon"] == 4
    cfg_file.write_text("engine:\n  horizon: -1\n")
    with pytest.raises(ConfigError):
        load_config(cfg_file)


def test_criterion_failure_exit_code(tmp_path, capsys):
    # Z at a tiny horizon is often negative, which fails the rejection-rate check
    with pytest.warns(UserWarning):
        code, out, _ = run(capsys, "sample-z", "--replicas", "60", "--out", str(tmp_path),
                           "--set", "martingale.horizon=0.3")
    assert code == 1
    assert json.loads(out)["status"] == "criterion_failed"
    assert load_manifest(tmp_path / "sample-z").status == "criterion_failed"


def test_json_format(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate-bbm", "--replicas", "3", "--format", "json", "--out", str(tmp_path),
                     *SMALL_BBM)
    assert code == 0
    d = tmp_path / "simulate-bbm"
    assert (d / "maxima.json").exists() and not (d / "maxima.csv").exists()
    assert len(json.loads((d / "maxima.json").read_text())) == 3


def test_solve_fkpp_defaults(tmp_path, capsys):
    code, _, _ = run(capsys, "solve-fkpp", "--out", str(tmp_path))
    assert code == 0
    d = tmp_path / "solve-fkpp"
    m = load_manifest(d)
    assert "profile.csv" in m.outputs
    assert m.criteria["wave_ode_residual"]["value"] < 1e-3
    assert m.criteria["wave_convergence"]["passed"]


def test_report_aggregates(tmp_path, capsys):
    run(capsys, "simulate-bbm", "--replicas", "2", "--out", str(tmp_path), *SMALL_BBM)
    with pytest.warns(UserWarning):
        run(capsys, "sample-z", "--replicas", "60", "--out", str(tmp_path), "--set", "martingale.horizon=0.3")
    code, _, _ = run(capsys, "report", "--out", str(tmp_path), "--set", "report.run_acceptance=true",
                     "--set", "report.criteria=[10]")
    s = json.loads((tmp_path / "report" / "summary.json").read_text())
    assert set(s["runs"]) == {"simulate-bbm", "sample-z"}
    assert all(r["verified"] for r in s["runs"].values())
    assert s["runs"]["sample-z"]["status"] == "criterion_failed"
    assert [a["number"] for a in s["acceptance"]] == [10]
    assert s["passed"] is False and code == 1
    assert Path(tmp_path / "report" / "acceptance.txt").read_text().count("\n") == 1
