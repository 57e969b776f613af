import json
import time

import pytest

from burgers_levels.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main


def test_plan_writes_json(tmp_path, capsys):
    assert main(["plan", "--alpha", "0.8", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "plan.json").read_text())
    assert doc["n"] == 2
    assert "levels n = 2" in capsys.readouterr().out


def test_plan_direct_regime(tmp_path, capsys):
    assert main(["plan", "--alpha", "0.45", "--out", str(tmp_path)]) == EXIT_OK
    assert "direct regime" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["plan", "--alpha", "1.0"],
    ["plan"],
    ["verify", "--suite", "nope"],
    ["simulate"],
    ["bogus"],
    ["verify", "--seed", "-1"],
    ["verify", "--workers", "0"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    try:
        code = main(argv + ["--out", str(tmp_path / "x")])
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE


def test_missing_config_is_io_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json")]) == EXIT_IO


def test_bad_config_key_is_usage_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"alpha": 0.6, "whatever": 3}))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_simulate_is_deterministic(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"alpha": 0.6, "K": 16, "dt": 0.01, "T": 0.1, "samples": 2,
                             "direct": True}))
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / name),
                     "--seed", "7"]) == EXIT_OK
    a = (tmp_path / "a" / "series.csv").read_bytes()
    assert a == (tmp_path / "b" / "series.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["system"] == "x"


def test_verify_planner_suite_fast_and_reproducible(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BURGERS_LEVELS_OUT", str(tmp_path))
    t = time.perf_counter()
    assert main(["verify", "--suite", "planner", "--workers", "1"]) == EXIT_OK
    assert time.perf_counter() - t < 1.0
    out = tmp_path / "verify-planner"
    assert {"report.json", "report.txt", "config.json", "fits"} <= {p.name for p in out.iterdir()}
    capsys.readouterr()
    assert main(["report", "--out", str(out), "--suite", "planner"]) == EXIT_OK
    assert "reproduced bit-identically" in capsys.readouterr().out
    assert main(["report", "--out", str(out)]) == EXIT_OK


def test_failed_check_exit_code_constant():
    assert EXIT_FAIL == 1
