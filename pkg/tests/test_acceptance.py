"""Acceptance criteria 1-10, run through the command line exactly as a user would.

The ``verify`` command is run twice with the same seed; criteria 1-9 are read
from its acceptance.csv and criterion 10 compares every CSV byte for byte.
One PASS/FAIL line per criterion is printed in the terminal summary (and on
stdout when the file is run as a script).
"""
import csv
import subprocess
import sys
from pathlib import Path

import pytest

NAMES = {10: "reruns byte-identical"}
LINES = {}


def _verify(out: Path, seed: int):
    cfg = out.parent / "verify.ini"
    cfg.write_text("[verify]\n")
    proc = subprocess.run([sys.executable, "-m", "artifact", "--config", str(cfg), "--out", str(out),
                           "--seed", str(seed)], capture_output=True, text=True)
    return proc


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    first = _verify(base / "run1", 0)
    second = _verify(base / "run2", 0)
    return base, first, second


def _rows(base):
    with open(base / "run1" / "acceptance.csv", newline="") as fh:
        return {int(r["criterion"]): r for r in csv.DictReader(fh)}


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(runs, number):
    base, first, _ = runs
    rows = _rows(base)
    assert number in rows, first.stderr
    row = rows[number]
    ok = row["passed"] == "1"
    LINES[number] = f"[{'PASS' if ok else 'FAIL'}] {number:2d} {row['name']}: {row['detail']}"
    assert ok, row["detail"]


def test_criterion_10_determinism(runs):
    base, first, second = runs
    a, b = base / "run1", base / "run2"
    files = sorted(p.name for p in a.glob("*.csv"))
    same = (first.returncode == second.returncode == 0 and files
            and files == sorted(p.name for p in b.glob("*.csv"))
            and all((a / f).read_bytes() == (b / f).read_bytes() for f in files))
    detail = f"exit codes {first.returncode}/{second.returncode}, {len(files)} CSV files compared"
    LINES[10] = f"[{'PASS' if same else 'FAIL'}] 10 {NAMES[10]}: {detail}"
    assert same, detail + "\n" + first.stdout[-2000:] + first.stderr[-2000:]


def summary_lines():
    return [LINES[k] for k in sorted(LINES)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
