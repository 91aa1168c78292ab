import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ngbound import __version__, cli, oracle
from ngbound.region2 import pure_min_overlap

DATA = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _write_state(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def _manifest(path):
    return json.loads(Path(path).read_text())


def test_purity_bound_csv_and_json_agree(tmp_path):
    assert cli.main(["purity-bound", "--samples", "50", "--out", "pb.csv"]) == 0
    assert cli.main(["purity-bound", "--samples", "50", "--out", "pb.json", "--format", "json"]) == 0
    rows = list(csv.DictReader(open("pb.csv")))
    js = json.load(open("pb.json"))
    assert len(rows) == 50 == len(js)
    assert float(rows[0]["mu"]) == 1.0 and float(rows[0]["mu_g"]) == 1.0
    mg = np.array([float(r["mu_g"]) for r in rows])
    assert np.all(np.diff(mg) < 0)
    np.testing.assert_array_equal(mg, [r["mu_g"] for r in js])
    man = _manifest("pb.csv.manifest.json")
    assert man["version"] == __version__ and man["config"]["samples"] == 50


def test_unwritable_path_exits_2(tmp_path, capsys):
    assert cli.main(["purity-bound", "--out", str(tmp_path / "missing" / "x.csv")]) == 2
    assert "cannot write" in capsys.readouterr().err
    assert cli.main(["purity-bound", "--out", str(tmp_path)]) == 2


def test_surface_counts_and_pure_row(capsys):
    assert cli.main(["surface", "--mug-steps", "5", "--mu-steps", "5", "--out", "s.csv"]) == 0
    err = capsys.readouterr().err
    assert "cells=25" in err
    rows = list(csv.DictReader(open("s.csv")))
    for r in rows:
        if float(r["mu"]) == 1.0:
            assert float(r["overlap"]) == pytest.approx(pure_min_overlap(float(r["mu_g"]))[0], abs=1e-12)
    first = Path("s.csv").read_text()
    cli.main(["surface", "--mug-steps", "5", "--mu-steps", "5", "--out", "s.csv"])
    assert Path("s.csv").read_text() == first
    assert _manifest("s.csv.manifest.json")["result"]["cells"] == 25


def test_pure_flags_number_states_and_switches():
    assert cli.main(["pure", "--samples", "40", "--out", "p.csv"]) == 0
    rows = list(csv.DictReader(open("p.csv")))
    flagged = [float(r["mu_g"]) for r in rows if r["number_state"] == "1"]
    for n in range(0, 5):
        assert any(abs(m - 1 / (2 * n + 1)) < 1e-12 for m in flagged)
    assert rows[-1]["mu_g"] == "1.0" and float(rows[-1]["overlap"]) == 1.0
    switches = _manifest("p.csv.manifest.json")["result"]["switch_points"]
    assert switches["r_0"] == pytest.approx(0.38551, abs=1e-5)


def test_check_vacuum(tmp_path, capsys):
    path = _write_state(tmp_path / "vac.json", {"dim": 1, "diagonal": [1]})
    assert cli.main(["check", "--state", path, "--out", "r.json"]) == 0
    rep = json.load(open("r.json"))
    assert abs(rep["margin"]) < 1e-8 and rep["wigner_positive"]


def test_check_fock_one(tmp_path):
    path = _write_state(tmp_path / "one.json", {"dim": 2, "diagonal": [0, 1]})
    assert cli.main(["check", "--state", path, "--out", "r.json"]) == 0
    rep = json.load(open("r.json"))
    assert abs(rep["margin"]) < 1e-10 and not rep["wigner_positive"]
    assert rep["min_wigner"] == pytest.approx(-1 / np.pi, abs=1e-9)


def test_check_thermal(tmp_path):
    mg = 0.35
    q = (1 - mg) / (1 + mg)
    w = [2 * mg / (1 + mg) * q ** n for n in range(64)]
    path = _write_state(tmp_path / "th.json", {"dim": 64, "diagonal": w})
    assert cli.main(["check", "--state", path, "--out", "r.json"]) == 0
    rep = json.load(open("r.json"))
    assert rep["margin"] > 0 and abs(rep["summary"]["delta"]) < 1e-9 and rep["wigner_positive"]


def test_check_below_bound_exits_3():
    assert cli.main(["check", "--state", str(DATA / "below_bound.json")]) == 3
    assert Path("ngbound_check.manifest.json").exists()


@pytest.mark.parametrize("text", ["{\"dim\": 2, ", "{\"dim\": 2}", "[1, 2]",
                                  "{\"dim\": 2, \"matrix\": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}"])
def test_check_invalid_exits_4(tmp_path, text, capsys):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert cli.main(["check", "--state", str(p)]) == 4
    assert "invalid state" in capsys.readouterr().err


def test_check_cutoff(tmp_path):
    path = _write_state(tmp_path / "big.json", {"dim": 10, "diagonal": [1] + [0] * 9})
    assert cli.main(["check", "--state", path, "--cutoff", "5"]) == 4


def test_wigner_command(tmp_path):
    path = _write_state(tmp_path / "one.json", {"dim": 2, "diagonal": [0, 1]})
    assert cli.main(["wigner", "--state", path, "--grid", "41", "--out", "w.csv"]) == 0
    lines = Path("w.csv").read_text().splitlines()
    assert lines[0] == "x,p,W" and len(lines) == 41 * 41 + 1
    assert cli.main(["wigner", "--state", path, "--grid", "41", "--format", "json", "--out", "w.json"]) == 0
    assert json.load(open("w.json"))["min_value"] == pytest.approx(-1 / np.pi, abs=1e-12)


def test_verify_quick_lemma_and_determinism():
    assert cli.main(["verify", "--suite", "lemma", "--quick", "--seed", "4", "--out", "a.json"]) == 0
    assert cli.main(["verify", "--suite", "lemma", "--quick", "--seed", "4", "--out", "b.json"]) == 0
    a, b = json.load(open("a.json")), json.load(open("b.json"))
    for ra, rb in zip(a["reports"], b["reports"]):
        assert ra["worst_margin"] == rb["worst_margin"]


def test_verify_violation_exits_5(monkeypatch):
    bad = oracle.OracleReport("fake", 1, -1.0, 0, 1)
    monkeypatch.setattr(cli, "_suite", lambda name, seed, quick: [bad])
    assert cli.main(["verify", "--suite", "region1"]) == 5
    assert json.load(open("ngbound_verify.json"))["reports"][0]["violations"] == 1


def test_module_entry_point(tmp_path):
    env = dict(os.environ, NGB_THREADS="1")
    out = subprocess.run([sys.executable, "-m", "ngbound", "purity-bound", "--samples", "3"],
                         capture_output=True, text=True, cwd=tmp_path, env=env)
    assert out.returncode == 0
    assert out.stdout.splitlines()[0] == "y,mu,mu_g"
    assert (tmp_path / "ngbound_purity-bound.manifest.json").exists()
