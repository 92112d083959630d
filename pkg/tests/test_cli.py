"""End-to-end command-line pipeline and exit codes."""

import csv
import json

import numpy as np
import pytest

from flexsum.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate_inner_outer_ratio_pipeline(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    inner = tmp_path / "inner.json"
    outer = tmp_path / "outer.json"
    code, out, _ = run(capsys, "generate", "--n", "5", "--t", "4", "--sigma", "0",
                       "--seed", "7", "--homogenize-windows", "--out", str(scen))
    assert code == 0
    code, _, _ = run(capsys, "inner", "--scenario", str(scen), "--method", "structure",
                     "--out", str(inner))
    assert code == 0
    code, _, _ = run(capsys, "outer", "--scenario", str(scen), "--method", "dilate",
                     "--out", str(outer))
    assert code == 0
    code, out, _ = run(capsys, "ratio", "--inner", str(inner), "--outer", str(outer))
    assert code == 0
    assert float(out.strip()) == pytest.approx(1.0, abs=1e-6)


def test_generate_round_trip_bytes(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "generate", "--n", "4", "--t", "6", "--sigma", "0.5",
                         "--seed", "3", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_disaggregate_csv(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    inner = tmp_path / "inner.json"
    profile = tmp_path / "profile.json"
    out_csv = tmp_path / "parts.csv"
    run(capsys, "generate", "--n", "3", "--t", "3", "--sigma", "0", "--seed", "1",
        "--homogenize-windows", "--out", str(scen))
    run(capsys, "inner", "--scenario", str(scen), "--method", "decomposed",
        "--out", str(inner))
    result = json.loads(inner.read_text())
    center = np.asarray(result["center"])
    mapping = np.asarray(result["map"])
    # aggregate profile: image of an interior base point
    from flexsum import chebyshev_center
    from flexsum.polytope import BaseSet

    base = BaseSet.from_dict(result["base"])
    anchor, _ = chebyshev_center(base.polytope)
    u = center + mapping @ anchor
    profile.write_text(json.dumps(u.tolist()))
    code, out, err = run(capsys, "disaggregate", "--result", str(inner),
                         "--profile", str(profile), "--out", str(out_csv))
    assert code == 0, err
    rows = list(csv.reader(out_csv.open()))
    assert rows[0][0] == "ev"
    parts = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    assert np.allclose(parts.sum(axis=0), u, atol=1e-6)


def test_validate_and_peak_demo(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    inner = tmp_path / "inner.json"
    run(capsys, "generate", "--n", "4", "--t", "4", "--sigma", "0.5", "--seed", "5",
        "--homogenize-windows", "--out", str(scen))
    run(capsys, "inner", "--scenario", str(scen), "--method", "structure",
        "--out", str(inner))
    code, out, _ = run(capsys, "validate", "--result", str(inner),
                       "--scenario", str(scen), "--samples", "40")
    assert code == 0
    assert "max_membership_violation" in out
    peak_csv = tmp_path / "peak.csv"
    code, out, _ = run(capsys, "peak-demo", "--scenario", str(scen),
                       "--group-size", "2", "--out", str(peak_csv))
    assert code == 0
    header = next(csv.reader(peak_csv.open()))
    assert header[:3] == ["period", "aggregate_u", "aggregate_x"]
    assert header[3:] == ["group_1", "group_2"]


def test_oracle2d_command(tmp_path, capsys):
    scen = tmp_path / "scen2.json"
    run(capsys, "generate", "--n", "2", "--t", "2", "--sigma", "0.3", "--seed", "2",
        "--homogenize-windows", "--out", str(scen))
    verts_csv = tmp_path / "verts.csv"
    code, out, _ = run(capsys, "oracle2d", "--scenario", str(scen), "--out", str(verts_csv))
    assert code == 0
    area = float(out.strip())
    assert area > 0
    rows = list(csv.reader(verts_csv.open()))
    assert rows[0] == ["x", "y"]
    assert len(rows) >= 4


def test_oracle2d_requires_two_periods(tmp_path, capsys):
    scen = tmp_path / "scen3.json"
    run(capsys, "generate", "--n", "2", "--t", "3", "--sigma", "0", "--seed", "2",
        "--homogenize-windows", "--out", str(scen))
    code, _, err = run(capsys, "oracle2d", "--scenario", str(scen),
                       "--out", str(tmp_path / "v.csv"))
    assert code == 1
    assert "2-period" in err


def test_malformed_json_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1, "sigma": ')
    code, _, err = run(capsys, "inner", "--scenario", str(bad), "--method", "structure",
                       "--out", str(tmp_path / "x.json"))
    assert code == 1
    assert "line" in err


def test_sweep_command(tmp_path, capsys):
    out_csv = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--n", "3", "--t", "3", "--sigmas", "0",
                       "--trials", "2", "--seed", "9", "--out", str(out_csv))
    assert code == 0
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["sigma", "trial", "method", "alpha_or_trace",
                       "logdet_inner", "logdet_outer", "ratio", "status"]
    assert len(rows) == 1 + 2 * 3
    assert "mean_ratio" in out
