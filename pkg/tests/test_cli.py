import json
import shutil
from pathlib import Path

import pytest

from stratwave.cli import Scenario, ScenarioError, main, run

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).parent / "golden" / "stratified_small.report.json"


def test_still_water_report(tmp_path):
    assert main(["solve", str(SCENARIOS / "still_water.json"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "ok" and rep["failures"] == []
    assert rep["diagnostics"]["M"] == 0.0
    assert all(rep["certificates"][k]["verdict"] for k in ("S1", "S2", "S3"))
    assert rep["sweep"]["classification"] == "symmetric"
    for name in ("diagnostics.csv", "trace.csv", "solution.bin", "contours.svg"):
        assert (tmp_path / name).stat().st_size > 0


def test_stratified_report_matches_golden(tmp_path):
    assert main(["solve", str(SCENARIOS / "stratified_small.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.json").read_bytes() == GOLDEN.read_bytes()


def test_stage_commands_toggle_analyses(tmp_path):
    scen = SCENARIOS / "stratified_small.json"
    assert main(["eigen", str(scen), "--out", str(tmp_path / "e")]) == 0
    rep = json.loads((tmp_path / "e" / "report.json").read_text())
    assert "eigen" in rep and "certificates" not in rep and "sweep" not in rep
    assert rep["eigen"]["lambda1"] > 0
    assert main(["sweep", str(scen), "--out", str(tmp_path / "s")]) == 0
    rep = json.loads((tmp_path / "s" / "report.json").read_text())
    assert "sweep" in rep and "eigen" not in rep


def test_malformed_scenarios_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == 2
    assert "cannot read scenario" in capsys.readouterr().err
    bad.write_text(json.dumps({"grid": {"L": 1.0}}))
    assert main(["certify", str(bad)]) == 2
    assert "invalid scenario" in capsys.readouterr().err
    with pytest.raises(ScenarioError):
        Scenario.from_dict({**json.loads((SCENARIOS / "still_water.json").read_text()),
                            "analysis": {"plots": True}})


def test_mandatory_stage_failure_exits_1(tmp_path):
    raw = json.loads((SCENARIOS / "still_water.json").read_text())
    raw["laminar"]["Q"] = 5.0  # below the critical head: no laminar flow
    path = tmp_path / "sub.json"
    path.write_text(json.dumps(raw))
    assert main(["solve", str(path), "--out", str(tmp_path / "o")]) == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["status"] == "failed"
    assert rep["failures"][0]["stage"] == "laminar"
    assert rep["failures"][0]["error"] == "NoLaminarFlowError"


def test_directory_batch_and_report(tmp_path, capsys):
    batch = tmp_path / "scen"
    shutil.copytree(SCENARIOS, batch)
    assert main(["solve", str(batch), "--out", str(tmp_path / "out")]) == 0
    assert main(["report", "--dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "still_water: status=ok" in out and "stratified_small: status=ok" in out


def test_report_without_reports_exits_2(tmp_path):
    assert main(["report", "--dir", str(tmp_path)]) == 2


def test_verify_commands(capsys):
    assert main(["verify", "eigen-props", "--trials", "3", "--seed", "1"]) == 0
    assert main(["verify", "max-principle", "--trials", "10", "--inject-negative"]) == 0
    out = capsys.readouterr().out
    assert "laplacian+25" in out and "witness found" in out


def test_run_returns_report_without_writing():
    scen = Scenario.load(SCENARIOS / "still_water.json")
    rep, status = run(scen)
    assert status == 0 and rep["laminar"]["d"] == pytest.approx(1.0)
