"""Acceptance suite: every criterion at its stated size and tolerance.

One test per criterion; each prints its pass/fail line so a verbose run
shows the full scoreboard.  The determinism criterion shells out to the
installed CLI twice and byte-compares the summaries.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from fol import acceptance


def _check(result, budget_s=None):
    print()
    print(result.line())
    assert result.passed, result.details
    if budget_s is not None:
        assert result.runtime <= budget_s, (
            f"criterion {result.cid} exceeded its runtime budget: "
            f"{result.runtime:.1f}s > {budget_s}s")


def test_criterion_1_spectral_identities():
    _check(acceptance.criterion_1_spectral_identities(), budget_s=60)


def test_criterion_2_regular_corpus():
    _check(acceptance.criterion_2_regular_corpus(), budget_s=300)


def test_criterion_3_negative_regular():
    _check(acceptance.criterion_3_negative_regular(), budget_s=300)


def test_criterion_4_log_inequality():
    _check(acceptance.criterion_4_log_inequality(), budget_s=600)


def test_criterion_5_negative_2m():
    _check(acceptance.criterion_5_negative_2m(), budget_s=600)


def test_criterion_6_constructions():
    _check(acceptance.criterion_6_constructions(), budget_s=60)


def test_criterion_7_frequency_gap():
    _check(acceptance.criterion_7_frequency_gap(), budget_s=60)


def test_criterion_8_solver_oracles():
    _check(acceptance.criterion_8_solver_oracles(), budget_s=600)


def test_criterion_9_monotonicity():
    _check(acceptance.criterion_9_monotonicity(), budget_s=300)


def test_criterion_10_determinism(tmp_path):
    t0 = time.time()
    outs = []
    for run in (1, 2):
        out_dir = tmp_path / f"run{run}"
        proc = subprocess.run(
            [sys.executable, "-m", "fol.cli", "verify-all", "--quick",
             "--seed", "2026", "--out-dir", str(out_dir)],
            capture_output=True, text=True, timeout=570)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append((out_dir / "verify_summary.json").read_bytes())
    elapsed = time.time() - t0
    assert outs[0] == outs[1], "summaries differ between identical runs"
    doc = json.loads(outs[0])
    assert doc["all_pass"] is True
    assert elapsed <= 600.0
    print(f"\n[PASS] criterion 10 ({elapsed:6.1f}s): end-to-end determinism -- "
          f"two quick runs byte-identical, exit 0")
