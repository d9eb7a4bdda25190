import csv
import json
import subprocess
import sys

import pytest

from sfdetau.cli import CSV_COLUMNS, RunConfig, UsageError, dump_report, main, run_benchmark, strip_timing


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_solve_writes_csv_and_json(tmp_path):
    out = tmp_path / "run"
    code = main([
        "solve", "--problem", "example1", "--orders", "1.5,1.9", "--grid-exp", "5",
        "--time-exp", "2", "--precond", "tau,none", "--out", str(out),
    ])
    assert code == 0
    rows = _read_csv(f"{out}.csv")
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert [r["preconditioner"] for r in rows] == ["tau", "none"]
    assert rows[0]["orders"] == "(1.5,1.9)" and rows[0]["N"] == "4" and rows[0]["M_plus_1"] == "32"
    assert float(rows[0]["iter_mean"]) < float(rows[1]["iter_mean"])
    report = json.loads((tmp_path / "run.json").read_text())
    assert report["all_converged"] and len(report["rows"]) == 2


def test_report_is_deterministic_apart_from_timing():
    cfg = RunConfig(grid_exp=[4], time_exp=[2], preconditioners=["tau", "circulant"], seed=7)
    a, _ = run_benchmark(cfg)
    b, _ = run_benchmark(RunConfig(grid_exp=[4], time_exp=[2], preconditioners=["tau", "circulant"], seed=7))
    assert dump_report(strip_timing(a)) == dump_report(strip_timing(b))


def test_threaded_cells_match_sequential():
    seq, _ = run_benchmark(RunConfig(grid_exp=[4, 5], time_exp=[1]))
    par, _ = run_benchmark(RunConfig(grid_exp=[4, 5], time_exp=[1], jobs=2))
    assert strip_timing(seq)["rows"] == strip_timing(par)["rows"]


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "example2", "orders": [1.5, 1.5, 1.5], "grid_exp": [3], "time_exp": [1]}))
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--time-exp", "2", "--out", str(out)]) == 0
    rows = _read_csv(f"{out}.csv")
    assert rows[0]["problem"] == "example2" and rows[0]["N"] == "4"


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--orders", "1.5"],
        ["solve", "--orders", "2.5,1.5"],
        ["solve", "--precond", "ilu"],
        ["solve", "--grid-exp", "1"],
        ["solve", "--tol", "2"],
        ["solve", "--orders", "a,b"],
        ["solve", "--bogus"],
        ["verify", "--orders", "2.0"],
        [],
    ],
)
def test_usage_errors_exit_one(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"unknown_field": 1}))
    assert main(["solve", "--config", str(cfg)]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1


def test_failed_solve_exits_two(tmp_path):
    assert main(["solve", "--grid-exp", "5", "--time-exp", "1", "--precond", "none", "--tol", "1e-14",
                 "--restart", "1"]) == 2


def test_validate_rejects_mismatched_orders():
    with pytest.raises(UsageError):
        RunConfig(problem="example2", orders=[1.5, 1.5]).validate()


def test_verify_passes_and_reports(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and not rep["failed"]


def test_verify_boundary_order():
    assert main(["verify", "--orders", "1.999"]) == 0


def test_verify_fault_injection_names_property(capsys):
    assert main(["verify", "--inject-fault", "coefficients"]) == 2
    err = capsys.readouterr().err
    assert "FAILED coefficient_properties" in err and "sign" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sfdetau", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "sfdetau" in proc.stdout
