"""Acceptance suite: runs ``cylas verify`` and reports one line per criterion.

Tolerances and runtime budgets live with each criterion in
``cylas.acceptance``; the suite runs the whole verify command twice so the
determinism of its own CSV output is checked too.
"""
import csv

import pytest

from cylas import acceptance, cli


@pytest.fixture(scope="module")
def verify_runs(tmp_path_factory):
    runs = []
    for k in range(2):
        root = tmp_path_factory.mktemp(f"verify{k}")
        status = cli.main(["verify", "--out", str(root), "--quiet"])
        runs.append((status, root / "verify"))
    return runs


def _lines(out_dir):
    return {int(ln[1:].split(".", 1)[0].split()[-1]): ln
            for ln in (out_dir / "timings.txt").read_text().splitlines()}


@pytest.mark.parametrize("crit", acceptance.CRITERIA, ids=lambda c: f"{c.key:02d}-{c.title.replace(' ', '-')}")
def test_criterion(verify_runs, crit, capsys):
    _, out_dir = verify_runs[0]
    line = _lines(out_dir)[crit.key]
    with capsys.disabled():
        print("\n" + line)
    assert line.startswith("[PASS]"), line


def test_verify_exit_status(verify_runs):
    assert [status for status, _ in verify_runs] == [0, 0]


def test_summary_lists_every_criterion(verify_runs):
    _, out_dir = verify_runs[0]
    with open(out_dir / "summary.csv", newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["criterion (index)", "title (text)", "passed (bool)"]
    assert [int(r[0]) for r in table[1:]] == [c.key for c in acceptance.CRITERIA]


def test_verify_csvs_byte_identical(verify_runs):
    (_, a), (_, b) = verify_runs
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names == sorted(p.name for p in b.glob("*.csv"))
    assert len(names) == len(acceptance.CRITERIA) + 1
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
