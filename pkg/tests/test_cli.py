import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fol.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_spectrum_table(capsys):
    code, out, _ = run_cli(["spectrum", "--n", "1", "--a", "0", "--K", "6"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    # eigenvalues k^2 for the unweighted circle
    vals = [float(l.split()[2]) for l in lines[1:]]
    assert vals == [float(k**2) for k in range(7)]


def test_spectrum_derives_weight_from_order(capsys):
    code, out, _ = run_cli(["spectrum", "--n", "1", "--s", "0.75", "--K", "2"], capsys)
    assert code == 0
    assert "a=-0.5" in out


def test_spectrum_rejects_bad_weight(capsys):
    code, _, err = run_cli(["spectrum", "--n", "1", "--a", "1.5", "--K", "2"], capsys)
    assert code == 2
    assert "parameter error" in err


def test_spectrum_requires_exactly_one_parametrization(capsys):
    code, _, err = run_cli(["spectrum", "--n", "1", "--a", "0", "--s", "0.5",
                            "--K", "2"], capsys)
    assert code == 2


def test_epi_check_records(tmp_path, capsys):
    out = tmp_path / "rec.jsonl"
    code, _, err = run_cli(["epi", "check", "--theorem", "regular", "--n", "1",
                            "--a", "0", "--corpus", "8", "--seed", "7",
                            "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 8
    rec = json.loads(lines[0])
    for key in ("theorem", "n", "a", "m", "W_z", "W_zeta", "bound", "margin",
                "pass", "truncation_budget"):
        assert key in rec
    assert rec["pass"] is True


def test_epi_check_requires_eps_for_2m(capsys):
    code, _, err = run_cli(["epi", "check", "--theorem", "log", "--n", "1",
                            "--a", "0", "--corpus", "2"], capsys)
    assert code == 2


def test_epi_calibrate_and_gap_roundtrip(tmp_path, capsys):
    cal = tmp_path / "cal.json"
    code, _, _ = run_cli(["epi", "calibrate", "--n", "1", "--a", "0",
                          "--corpus", "40", "--seed", "3", "--out", str(cal)], capsys)
    assert code == 0
    doc = json.loads(cal.read_text())
    assert doc["eps_log"] >= 2.0**-12
    gap = tmp_path / "gap.json"
    code, _, _ = run_cli(["gap", "--n", "1", "--a", "0", "--m", "1",
                          "--eps-pos", str(doc["eps_log"]),
                          "--eps-neg", str(doc["eps_neg2m"]),
                          "--out", str(gap)], capsys)
    assert code == 0
    gdoc = json.loads(gap.read_text())
    assert gdoc[0]["center"] == 1.5
    assert gdoc[0]["left_width"] == pytest.approx(0.5, abs=1e-12)
    assert gdoc[1]["center"] == 2.0


def test_gap_defaults_to_stdout(capsys):
    code, out, _ = run_cli(["gap", "--n", "1", "--a", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc[0]["right_width"] == pytest.approx(0.5, abs=1e-12)


def test_solve_classify_pipeline(tmp_path, capsys):
    prefix = tmp_path / "run"
    code, out, _ = run_cli(["solve", "--n", "1", "--a", "0", "--datum",
                            "halfspace", "--nx", "64", "--out-prefix",
                            str(prefix), "--figures"], capsys)
    assert code == 0
    assert (tmp_path / "run.ckpt").exists()
    slice_csv = (tmp_path / "run_slice.csv").read_text()
    assert slice_csv.startswith("x,v,phi,flux,contact")
    prof_csv = (tmp_path / "run_profile.csv").read_text()
    assert prof_csv.startswith("r,H,I,N,Phi,W,Wmod")
    assert (tmp_path / "run_solution.png").exists()
    assert (tmp_path / "run_profile.png").exists()
    cls = tmp_path / "cls.json"
    code, _, _ = run_cli(["classify", "--checkpoint", str(tmp_path / "run.ckpt"),
                          "--x0", "0.0", "--out", str(cls)], capsys)
    assert code == 0
    doc = json.loads(cls.read_text())
    assert doc["kind"] == "regular"
    assert abs(doc["lambda_hat"] - 1.5) < 0.1


def test_classify_missing_checkpoint(tmp_path, capsys):
    code, _, err = run_cli(["classify", "--checkpoint",
                            str(tmp_path / "nope.ckpt")], capsys)
    assert code == 5
    assert "io error" in err


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 1\na = 0.5\nK = 4  # comment\n")
    code, out, _ = run_cli(["--config", str(cfg), "spectrum"], capsys)
    assert code == 0
    assert "a=0.5" in out


def test_config_file_flags_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 1\na = 0.5\nK = 4\n")
    code, out, _ = run_cli(["--config", str(cfg), "spectrum", "--K", "2"], capsys)
    assert code == 0
    assert out.count("\n") < 8  # the explicit K=2 wins over the config K=4


def test_epi_records_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
    for out in (out1, out2):
        code, _, _ = run_cli(["epi", "check", "--theorem", "negative-regular",
                              "--n", "1", "--a", "0.5", "--corpus", "6",
                              "--seed", "11", "--out", str(out)], capsys)
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_thread_cap_env(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("FOL_THREADS", "2")
    out1 = tmp_path / "t.jsonl"
    code, _, _ = run_cli(["epi", "check", "--theorem", "regular", "--n", "1",
                          "--a", "0", "--corpus", "6", "--seed", "5",
                          "--out", str(out1)], capsys)
    assert code == 0
    monkeypatch.setenv("FOL_THREADS", "1")
    out2 = tmp_path / "t2.jsonl"
    code, _, _ = run_cli(["epi", "check", "--theorem", "regular", "--n", "1",
                          "--a", "0", "--corpus", "6", "--seed", "5",
                          "--out", str(out2)], capsys)
    assert out1.read_bytes() == out2.read_bytes()
