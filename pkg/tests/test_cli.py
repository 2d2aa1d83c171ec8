import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from uavrelay.cli import EXIT_BOUND, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main

SMALL = ["--set", "layout.rings=1", "--set", "traffic.total_users=70"]


def _rows(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.reader(io.StringIO(body)))


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_analytic_spot_row(capsys):
    code, out = _run(capsys, ["analytic", "--kind", "GroundRn", "--xi-db", "0"])
    assert code == EXIT_OK
    assert out.startswith("# digest ")
    rows = _rows(out)
    assert rows[0] == ["xi_db", "ccdf"]
    assert float(rows[1][0]) == 0.0
    assert abs(float(rows[1][1]) - 0.0848049724711137773) < 1e-12


def test_analytic_both_kinds_identical_at_unit_distance(capsys):
    code, out = _run(capsys, ["analytic", "--kind", "both", "--r", "1", "--lam", "0.7"])
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["xi_db", "ccdf_suav", "ccdf_ground"]
    assert all(r[1] == r[2] for r in rows[1:])
    assert len(rows) == 10


@pytest.mark.parametrize("grid", ["-inf", "inf", "nan", "abc", ""])
def test_analytic_rejects_bad_grid(capsys, grid):
    assert main(["analytic", f"--xi-db={grid}"]) == EXIT_USAGE


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["nope"]) == EXIT_USAGE
    assert main(["analytic", "--kind", "Balloon"]) == EXIT_USAGE
    assert main(["analytic", "--lam", "x"]) == EXIT_USAGE


def test_validation_errors(capsys, tmp_path):
    assert main(["analytic", "--lam", "-1"]) == EXIT_VALIDATION
    assert main(["mc-validate", "--window", "1.5"]) == EXIT_VALIDATION
    out = str(tmp_path / "o")
    assert main(["sweep", "--out-dir", out, "--set", "drops=0"]) == EXIT_VALIDATION
    assert main(["sweep", "--out-dir", out, "--set", "radio.alpha_los=5"]) == EXIT_VALIDATION
    assert main(["sweep", "--out-dir", out, "--set", "radio.nope=5"]) == EXIT_VALIDATION
    bad = tmp_path / "bad.json"
    bad.write_text('{"master_seed": 1, "drops": 0}')
    assert main(["simulate", "--scenario", str(bad), "--out-dir", out]) == EXIT_VALIDATION
    assert main(["simulate", "--scenario", str(tmp_path / "missing.json"), "--out-dir", out]) == EXIT_USAGE


def test_mc_validate_default_passes(capsys):
    code, out = _run(capsys, ["mc-validate"])
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["xi_db", "empirical", "analytic", "abs_dev"]
    assert max(float(r[3]) for r in rows[1:]) <= 0.01


def test_mc_validate_undersampled_fails(capsys):
    # ten draws cannot resolve the curve to 0.01: expected noise, not a defect
    code, _ = _run(capsys, ["mc-validate", "--samples", "10"])
    assert code == EXIT_BOUND


def test_mc_validate_byte_identical_across_workers(capsys):
    argv = ["mc-validate", "--samples", "20000", "--seed", "4", "--kind", "SuavRn", "--r", "0.5"]
    _, a = _run(capsys, argv)
    _, b = _run(capsys, argv)
    _, c = _run(capsys, argv + ["--workers", "3"])
    assert a == b == c


def test_mc_validate_sorts_thresholds(capsys):
    _, out = _run(capsys, ["mc-validate", "--samples", "5000", "--xi-db", "10,-10,0"])
    assert [r[0] for r in _rows(out)[1:]] == ["-10.0", "0.0", "10.0"]


def test_simulate_single_row(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["simulate", *SMALL, "--drops", "1", "--f", "1", "--scheme", "Reference", "--out-dir", str(out)])
    assert code == EXIT_OK
    rows = _rows((out / "drops.csv").read_text())
    assert rows[0] == ["F", "scheme", "drop", "mean_bps", "qos_bps"]
    assert len(rows) == 2 and rows[1][:3] == ["1.0", "Reference", "0"]
    agg = _rows((out / "aggregate.csv").read_text())
    assert agg[0] == ["F", "scheme", "drops", "mean_bps", "mean_ci95", "qos_bps", "qos_ci95"]
    assert agg[1][4] == "nan"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert set(manifest) >= {"digest", "tool_version", "parameters", "wall_clock_s", "outputs"}
    assert (out / "drops.csv").read_text().startswith(f"# digest {manifest['digest']}\n")


def test_sweep_row_count_and_determinism(tmp_path, capsys):
    argv = ["sweep", *SMALL, "--drops", "2", "--f", "1,3", "--schemes", "Reference,FixedRelays,MobileRelays"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(a)]) == EXIT_OK
    assert main(argv + ["--out-dir", str(b), "--workers", "2"]) == EXIT_OK
    assert len(_rows((a / "drops.csv").read_text())) == 1 + 2 * 3 * 2
    for name in ("drops.csv", "aggregate.csv", "scenario.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_digest_tracks_scenario(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["simulate", *SMALL, "--drops", "1", "--scheme", "UpperBound"]
    main(base + ["--out-dir", str(a)])
    main(base + ["--out-dir", str(b), "--set", "radio.bandwidth_hz=2e7"])
    da = json.loads((a / "manifest.json").read_text())["digest"]
    db = json.loads((b / "manifest.json").read_text())["digest"]
    assert da != db


def test_scenario_file_round_trip(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", *SMALL, "--drops", "1", "--scheme", "UpperBound", "--out-dir", str(out)]) == EXIT_OK
    again = tmp_path / "again"
    assert main(["simulate", "--scenario", str(out / "scenario.json"), "--drops", "1", "--scheme", "UpperBound",
                 "--out-dir", str(again)]) == EXIT_OK
    assert (out / "drops.csv").read_bytes() == (again / "drops.csv").read_bytes()


@given(st.lists(st.floats(-40, 40, allow_nan=False), min_size=1, max_size=12),
       st.sampled_from(["SuavRn", "GroundRn", "both"]))
@settings(max_examples=25, deadline=None)
def test_analytic_property(grid, kind):
    import contextlib

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["analytic", "--kind", kind, "--xi-db=" + ",".join(repr(g) for g in grid)])
    assert code == EXIT_OK
    rows = _rows(buf.getvalue())
    assert len(rows) == len(grid) + 1
    for r in rows[1:]:
        assert all(0.0 <= float(v) <= 1.0 for v in r[1:])
