import csv
import math

import numpy as np
import pytest

from cylas import cli


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--quiet"])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- classify -----------------------------------------------------------------

def test_classify_prints_both_charts(tmp_path, capsys):
    status = cli.main(["classify", "--a", "-1", "--b", "0", "--p", "3", "--n", "5", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "regime: I" in out and "c = " in out and "sigma = " in out
    assert "homoclinic decay rate 1" in out
    # p = 3 lies above the critical value 7/3 for n = 5, so the run flags it
    assert status == 2


def test_classify_from_ball_chart(tmp_path, capsys):
    assert cli.main(["classify", "--c", "0", "--sigma", "0", "--p", "5", "--n", "3",
                     "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "a = -1/4, b = 0" in out and "regime: I" in out


def test_admissible_classify_exits_zero(tmp_path):
    assert run(tmp_path, "classify", "--a", "-1/4", "--p", "3", "--n", "3") == 0
    table = rows(tmp_path / "classify" / "clauses.csv")
    assert table[0] == ["clause (text)", "chart (text)", "passed (bool)", "detail (text)"]
    assert all(r[2] == "true" for r in table[1:])


@pytest.mark.parametrize("args", [
    ("classify", "--a", "-1", "--n", "5"),                              # missing p
    ("classify", "--a", "-1", "--c", "0", "--p", "3"),                  # two charts
    ("classify", "--c", "0", "--p", "3"),                               # half a ball chart
    ("classify", "--a", "x", "--p", "3"),                               # not a number
    ("verify", "--only", "bogus"),
    ("nonsense",),
])
def test_usage_errors_exit_two(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_inadmissible_run_exits_two(tmp_path):
    assert run(tmp_path, "singularity", "--a", "-1", "--b", "1", "--p", "2", "--n", "4") == 2


def test_negative_values_join_their_flag():
    assert cli._join_negative_values(["--a", "-1/4", "--p", "3"]) == ["--a=-1/4", "--p", "3"]
    assert cli._join_negative_values(["--quiet", "--a", "-1"])[-1] == "--a=-1"


# -- configuration ------------------------------------------------------------

def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# period run\na = -1\np = 3\nh0 = -0.3\nn = 4\ncycles = 2\n")
    rc = cli.build_config("period", {"config": str(cfg), "cycles": 5, "out": str(tmp_path)})
    assert rc["cycles"] == 5 and rc["h0"] == -0.3 and rc["n"] == 4
    assert rc.params.a == -1 and rc.chart == "cylinder"


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("a = -1\np = 3\nwidth = 7\n")
    assert run(tmp_path, "classify", "--config", str(cfg)) == 2


def test_config_rejects_malformed_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("a -1\n")
    with pytest.raises(cli.UsageError):
        cli.read_config(cfg)


def test_manifest_reruns_as_config(tmp_path):
    first = tmp_path / "first"
    assert cli.main(["period", "--a", "-1", "--p", "3", "--h0", "-0.4", "--out", str(first), "--quiet"]) == 0
    second = tmp_path / "second"
    assert cli.main(["period", "--config", str(first / "period" / "manifest.txt"),
                     "--out", str(second), "--quiet"]) == 0
    a = (first / "period" / "period.csv").read_bytes()
    assert a == (second / "period" / "period.csv").read_bytes()


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CYLAS_OUT", str(tmp_path / "env"))
    assert cli.main(["classify", "--a", "-1/4", "--p", "3", "--quiet"]) == 0
    assert (tmp_path / "env" / "classify" / "manifest.txt").exists()


# -- commands -----------------------------------------------------------------

def test_period_dual_methods_agree(tmp_path):
    assert run(tmp_path, "period", "--a", "-1", "--p", "3", "--h0", "-0.4") == 0
    table = rows(tmp_path / "period" / "period.csv")
    assert table[0] == ["method (text)", "period (1)", "rel_gap (1)"]
    p1, p2 = (float(r[1]) for r in table[1:3])
    assert abs(p1 - p2) / p1 <= 1e-6


def test_fit_recovers_rate(tmp_path):
    t = np.linspace(0, 5, 60)
    src = tmp_path / "data.csv"
    np.savetxt(src, np.column_stack([t, 3 * np.exp(-2 * t)]), delimiter=",", header="t,v", comments="")
    assert run(tmp_path, "fit", "--input", str(src)) == 0
    table = rows(tmp_path / "fit" / "fit.csv")
    col = [h.split(" ")[0] for h in table[0]].index("gamma")
    assert float(table[1][col]) == pytest.approx(2, abs=1e-10)


def test_integrate_writes_trajectory(tmp_path):
    assert run(tmp_path, "integrate", "--a", "-1", "--p", "3", "--psi0", "1.2", "--t-max", "5",
               "--samples", "51") == 0
    table = rows(tmp_path / "integrate" / "trajectory.csv")
    assert table[0] == ["t (1)", "psi (1)", "dpsi (1)", "H (1)"]
    H = np.array([float(r[3]) for r in table[1:]])
    assert len(H) == 51 and np.ptp(H) <= 1e-8


def test_portrait_outputs(tmp_path):
    assert run(tmp_path, "portrait", "--a", "-1", "--p", "3", "--levels", "-1/2,-1/4,0,1/4") == 0
    d = tmp_path / "portrait"
    levels = {float(r[0]) for r in rows(d / "contours.csv")[1:]}
    assert levels == {-0.5, -0.25, 0.0, 0.25}
    svg = (d / "portrait.svg").read_text()
    assert 'version="1.1"' in svg and "<metadata>" in svg and "command = portrait" in svg


def test_portrait_default_levels(tmp_path):
    assert run(tmp_path, "portrait", "--a", "-1", "--p", "3", "--grid", "41") == 0
    levels = sorted({float(r[0]) for r in rows(tmp_path / "portrait" / "contours.csv")[1:]})
    assert levels == pytest.approx([-0.5, -0.25, 0.0])


def test_pde_small_run(tmp_path):
    assert run(tmp_path, "pde", "--a", "-1", "--b", "2", "--p", "3", "--n", "3", "--t-max", "10",
               "--theta-intervals", "16", "--t-intervals", "100") == 0
    d = tmp_path / "pde"
    assert (d / "field.csv").exists()
    assert rows(d / "defect.csv")[0] == ["t (1)", "ubar (1)", "defect (1)"]
    rate = next(ln for ln in (d / "report.txt").read_text().splitlines() if ln.startswith("symmetry rate"))
    assert float(rate.split("=")[1].split()[0]) >= 0.9


def test_singularity_tables(tmp_path):
    assert run(tmp_path, "singularity", "--a", "-1/4", "--p", "3", "--n", "3", "--samples", "500") == 0
    table = rows(tmp_path / "singularity" / "verdicts.csv")
    verdicts = {r[0]: r[1] for r in table[1:]}
    assert verdicts["FastDecay"] == "removable-smooth"
    assert verdicts["ConstantLimit"] == "non-removable-rate"


def test_verify_subset_and_forced_failure(tmp_path):
    assert run(tmp_path, "verify", "--only", "3") == 0
    assert (tmp_path / "verify" / "criterion_03.csv").exists()
    assert not (tmp_path / "verify" / "criterion_01.csv").exists()
    assert run(tmp_path, "verify", "--only", "2", "--tol", "1e-14", "--no-timing") == 1


# -- invariants ---------------------------------------------------------------

def test_every_csv_header_names_units(tmp_path):
    run(tmp_path, "portrait", "--a", "-1", "--p", "3", "--grid", "41")
    run(tmp_path, "classify", "--a", "-1/4", "--p", "3")
    files = list(tmp_path.rglob("*.csv"))
    assert files
    for f in files:
        head = rows(f)[0]
        assert all(h.endswith(")") and " (" in h for h in head), f


def test_reruns_are_byte_identical(tmp_path):
    args = ["portrait", "--a", "-1", "--p", "3", "--grid", "41", "--levels", "-0.3,0"]
    outs = []
    for k in range(2):
        root = tmp_path / str(k)
        assert cli.main([*args, "--out", str(root), "--quiet"]) == 0
        outs.append({f.name: f.read_bytes() for f in (root / "portrait").iterdir() if f.suffix in (".csv", ".svg")})
    assert outs[0] == outs[1]


def test_timestamp_only_touches_svg_comment(tmp_path):
    base = ["portrait", "--a", "-1", "--p", "3", "--grid", "41", "--levels", "-0.3"]
    cli.main([*base, "--out", str(tmp_path / "plain"), "--quiet"])
    cli.main([*base, "--timestamp", "--out", str(tmp_path / "stamped"), "--quiet"])
    plain = (tmp_path / "plain" / "portrait" / "portrait.svg").read_text().splitlines()
    stamped = (tmp_path / "stamped" / "portrait" / "portrait.svg").read_text().splitlines()
    extra = [ln for ln in stamped if ln not in plain]
    assert extra and all(ln.startswith("<!--") or "timestamp" in ln for ln in extra)
    assert math.isclose(len(stamped) - len(plain), 1, abs_tol=1)
