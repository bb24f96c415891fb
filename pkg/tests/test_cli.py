import json

import pytest

from app.cli import build_parser, main


def test_monitor(scenarios_dir, tmp_path, capsys):
    code = main([
        "monitor",
        "--scenario", str(scenarios_dir / "example1.json"),
        "--signal", str(scenarios_dir / "example1_x_double_prime.csv"),
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "11/46" in out
    assert "Relaxed spec: G[24,51](x >= 5) & F[75,124](x <= -5)" in out
    report = json.loads((tmp_path / "monitor.json").read_text())
    assert report["report"]["tau"] == "11/46"
    assert report["time_robustness_right"] == -114


def test_monitor_without_out_dir_writes_nothing(scenarios_dir, isolated_output):
    code = main([
        "monitor",
        "--scenario", str(scenarios_dir / "example1.json"),
        "--signal", str(scenarios_dir / "example1_x_prime.csv"),
    ])
    assert code == 0
    assert not isolated_output.exists()


def test_validation_error_exit_code(scenarios_dir, tmp_path, capsys):
    scenario = json.loads((scenarios_dir / "example1.json").read_text())
    scenario["spec"] = "G[15,60](x >= 5) & y <= 2"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(scenario))
    code = main(["monitor", "--scenario", str(path), "--signal", str(scenarios_dir / "example1_x_prime.csv")])
    assert code == 4
    assert "error:" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path):
    assert main(["oracle", "--scenario", str(tmp_path / "missing.json")]) == 4


def test_export_lp(scenarios_dir, tmp_path, capsys):
    code = main(["export-lp", "--scenario", str(scenarios_dir / "oracle_micro.json"), "--out-dir", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "model.lp").read_text()
    assert text.startswith("\\ Model stl_relaxation")
    assert "binary" in capsys.readouterr().out


def test_oracle(scenarios_dir, tmp_path, capsys):
    code = main(["oracle", "--scenario", str(scenarios_dir / "oracle_micro.json"), "--out-dir", str(tmp_path)])
    assert code == 0
    assert "tau* = 0/1" in capsys.readouterr().out
    result = json.loads((tmp_path / "oracle.json").read_text())
    assert result["tau"] == "0/1"
    assert result["enumerated"] == 1432


def test_unknown_objective_is_rejected_by_parser():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["synthesize", "--scenario", "s.json", "--objective", "fastest"])


@pytest.mark.solver
def test_synthesize_writes_artifacts(scenarios_dir, tmp_path, backend):
    code = main([
        "synthesize",
        "--scenario", str(scenarios_dir / "oracle_micro.json"),
        "--out-dir", str(tmp_path),
        "--backend", backend.name,
        "--keep-lp",
    ])
    assert code == 0
    for name in ("trajectory.csv", "report.json", "relaxed_spec.txt", "model.lp"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "relaxed_spec.txt").read_text().strip() == "F[2,4](x >= 3)"
    assert json.loads((tmp_path / "report.json").read_text())["report"]["tau"] == "0/1"
