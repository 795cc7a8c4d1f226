import csv
import hashlib
import json

import numpy as np
import pytest

from securebf import cli
from securebf.optimizer import SolverFailure


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert cli.main(["solve", "--out", str(out)]) == 0
    return out


def test_solve_writes_solution(solved):
    doc = json.loads((solved / "solution.json").read_text())
    tr = doc["trace_w"]
    assert doc["rank1_gap"] <= 1e-6 * tr
    assert doc["min_asr_bps_hz"] > 0
    assert len(doc["w_real"]) == len(doc["w_imag"]) == 8
    man = json.loads((solved / "manifest.json").read_text())
    assert man["exit_code"] == 0 and man["command"] == "solve"
    assert man["scenario"]["gamma_th_db"] == 15.0
    assert "started_utc" in man and "finished_utc" in man
    assert str(solved / "solution.json") in man["outputs"]


def test_beampattern_from_solution(capsys, solved, tmp_path):
    code, _, _ = _run(capsys, "beampattern", "--weights", str(solved / "solution.json"), "--grid", "37x73", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "beampattern.csv") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["theta_deg", "phi_deg", "gain_db"]
    assert len(rows) == 37 * 73
    g = np.array([float(r["gain_db"]) for r in rows])
    assert g.max() == 0.0 and np.all(g <= 0.0)


def test_montecarlo_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(capsys, "montecarlo", "--draws", "1000", "--out", str(a))[0] == 0
    assert _run(capsys, "montecarlo", "--draws", "1000", "--out", str(b))[0] == 0
    for name in ("histogram.csv", "outage.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # re-running from the manifest reproduces the artifacts
    c = tmp_path / "c"
    assert _run(capsys, "montecarlo", "--draws", "1000", "--scenario", str(a / "manifest.json"), "--out", str(c))[0] == 0
    for name in ("histogram.csv", "outage.csv", "montecarlo.json"):
        assert _sha(a / name) == _sha(c / name)


def test_seed_flag_changes_draws(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(capsys, "montecarlo", "--draws", "500", "--out", str(a))
    _run(capsys, "montecarlo", "--draws", "500", "--seed", "9", "--out", str(b))
    assert (a / "histogram.csv").read_bytes() != (b / "histogram.csv").read_bytes()
    assert json.loads((b / "manifest.json").read_text())["seed"] == 9


def test_config_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("su_directions_deg: [[90, 0]]\np_out_interference: 1.5\n")
    code, _, err = _run(capsys, "solve", "--scenario", str(bad), "--out", str(tmp_path / "o"))
    assert code == cli.EXIT_CONFIG == 2
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "ScenarioError" and doc["field"] == "p_out_interference"
    assert _run(capsys, "solve", "--no-such-flag")[0] == 2
    assert _run(capsys, "oracle", "--out", str(tmp_path / "o2"))[0] == 2  # 8-element default


def test_infeasible_exit_code(capsys, tmp_path):
    sc = tmp_path / "inf.yaml"
    sc.write_text("su_directions_deg: [[90, 0]]\npu_directions_deg: [[90, 0]]\n")
    code, _, err = _run(capsys, "solve", "--scenario", str(sc), "--out", str(tmp_path / "o"))
    assert code == cli.EXIT_INFEASIBLE == 3
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ScenarioInfeasible"


def test_numerical_failure_exit_code(capsys, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverFailure("stalled", {"rate": 1.0})

    monkeypatch.setattr(cli, "solve_scheme", boom)
    code, _, err = _run(capsys, "solve", "--out", str(tmp_path))
    assert code == cli.EXIT_NUMERICAL == 4
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "SolverFailure" and doc["context"] == {"rate": 1.0}
    assert json.loads((tmp_path / "manifest.json").read_text())["exit_code"] == 4


def test_oracle_subcommand(capsys, tmp_path):
    sc = tmp_path / "two.yaml"
    sc.write_text(
        "n1: 2\nn2: 1\nsu_directions_deg: [[80, 5]]\neve_directions_deg: [[60, 60]]\n"
        "pu_directions_deg: [[120, -70]]\npower_dbw: 0\n"
    )
    code, out, _ = _run(capsys, "oracle", "--grid", "90", "--scenario", str(sc), "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc["oracle_feasible"]
    assert doc["optimizer_min_asr_bps_hz"] == pytest.approx(doc["oracle_min_asr_bps_hz"], rel=0.02)


def test_sweep_subcommand(capsys, tmp_path):
    sc = tmp_path / "two.yaml"
    sc.write_text("n1: 2\nn2: 1\nsu_directions_deg: [[80, 5]]\neve_directions_deg: [[60, 60]]\n")
    code, _, _ = _run(capsys, "sweep", "--scenario", str(sc), "--power-sweep=-10:0:10", "--scheme", "robust", "--scheme", "perfect", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [r["scheme"] for r in rows] == ["robust", "perfect-csi"] * 2
    assert "min_asr_bps_hz" in rows[0] and "power_dbw" in rows[0]


def test_every_header_names_units(solved, tmp_path):
    units = ("_db", "_deg", "_dbw", "_bps_hz", "_s", "index", "count", "fraction", "metric", "subject", "scheme", "converged", "error", "feasible")
    with open(solved / "trace.csv") as f:
        header = next(csv.reader(f))
    for col in header:
        assert col.endswith(units) or col in units, col
