import csv
import io
import json
import math

import numpy as np
import pytest

from mmlab import report
from mmlab.cli import main
from mmlab.rng import BLOCK, blocked_uniform, substream


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cone_mass_json(capsys):
    code, out, _ = run(capsys, "cone-mass", "--alpha", "0.5")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] and rep["command"] == "cone-mass"
    res = rep["result"]
    assert {"alpha", "m", "ci"} <= set(res)
    assert res["ci"][0] <= res["m"] <= res["ci"][1]
    assert abs(res["m"] / 0.5 - 1 / 12) <= 0.25


def test_profile_csv_columns(capsys):
    code, out, _ = run(capsys, "profile", "--surface", "cube", "--count", "3", "--outer", "32", "--inner", "32",
                       "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["r", "V_r", "se", "V_r_over_r", "V_r_over_r2"]
    assert len(rows) == 4
    r, V = float(rows[1][0]), float(rows[1][1])
    assert float(rows[1][4]) == pytest.approx(V / r ** 2)
    assert float(rows[1][2]) > 0


def test_reruns_identical_apart_from_metadata(tmp_path):
    args = ["deviation", "--surface", "tetrahedron", "--r", "0.1", "--outer", "64", "--inner", "64", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    a = json.loads((tmp_path / "a" / "deviation.json").read_text())
    b = json.loads((tmp_path / "b" / "deviation.json").read_text())
    assert report.dumps(report.strip_metadata(a)) == report.dumps(report.strip_metadata(b))
    assert a["config_hash"] == b["config_hash"]


def test_config_error_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.off"
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0\n")
    out = tmp_path / "out"
    code, _, err = run(capsys, "deviation", "--surface", str(bad), "--r", "0.1", "--out", str(out))
    assert code == 2
    assert "MeshError" in err and "seed=0" in err
    assert not out.exists()
    assert run(capsys, "deviation", "--surface", "cube")[0] == 2  # missing --r
    assert run(capsys, "deviation", "--surface", "no_such_surface", "--r", "0.1")[0] == 2
    assert run(capsys, "cone-mass", "--alpha", "9")[0] == 2


def test_runtime_error_exits_1_without_output(tmp_path, capsys):
    out = tmp_path / "out"
    code, _, err = run(capsys, "ball-volume", "--surface", "cube", "--point", "0,0.3,0.3", "--r", "2",
                       "--budget", "5", "--out", str(out))
    assert code == 1
    assert "BudgetExceeded" in err
    assert not out.exists()


def test_failed_check_exits_1_but_reports(tmp_path, capsys):
    code, out, err = run(capsys, "mean-curv-check", "--surface", "cube", "--vertex", "0", "--r", "0.05",
                         "--C", "1e-4")
    assert code == 1
    assert json.loads(out)["ok"] is False
    assert "check failed" in err


def test_surface_info_and_ball_volume(capsys):
    code, out, _ = run(capsys, "surface-info", "--surface", "cube")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["total_area"] == pytest.approx(6.0)
    assert res["total_defect"] == pytest.approx(4 * math.pi)
    code, out, _ = run(capsys, "ball-volume", "--surface", "cube", "--vertex", "0", "--r", "0.2")
    assert code == 0
    assert json.loads(out)["result"]["b"]["value"] == pytest.approx(0.75 * math.pi * 0.04)


def test_suite_single_criterion(tmp_path, capsys):
    code, _, err = run(capsys, "suite", "--only", "3", "--out", str(tmp_path))
    assert code == 0
    assert "[PASS] criterion 3" in err
    rep = json.loads((tmp_path / "suite.json").read_text())
    assert "seconds" in rep["metadata"]


# ------------------------------------------------------------------ report
def test_jsonable_and_hash():
    obj = {"b": np.float64(1.5), "a": np.arange(3), "c": float("nan"), "d": math.inf}
    text = report.dumps(obj)
    assert text.endswith("\n")
    back = json.loads(text)
    assert list(back) == ["a", "b", "c", "d"]
    assert back["a"] == [0, 1, 2] and back["c"] == "nan" and back["d"] == "inf"
    assert report.config_hash({"x": 1, "y": 2}) == report.config_hash({"y": 2, "x": 1})
    assert report.config_hash({"x": 1}) != report.config_hash({"x": 2})


def test_write_files_is_atomic(tmp_path):
    paths = report.write_files(tmp_path / "o", {"a.json": "{}\n", "b.csv": "r\n"})
    assert sorted(p.name for p in map(__import__("pathlib").Path, paths)) == ["a.json", "b.csv"]
    assert not any(p.name.startswith(".") or p.suffix == ".tmp" for p in (tmp_path / "o").iterdir())


# --------------------------------------------------------------------- rng
def test_substreams_are_deterministic_and_distinct():
    a = substream(1, 2, 3).random(5)
    assert np.array_equal(a, substream(1, 2, 3).random(5))
    assert not np.array_equal(a, substream(1, 2, 4).random(5))
    assert not np.array_equal(a, substream(2, 2, 3).random(5))


def test_blocked_uniform_prefix_property():
    n = BLOCK + 17
    full = blocked_uniform(0, 5, n, 2)
    assert np.array_equal(full[:10], blocked_uniform(0, 5, 10, 2))
    assert np.array_equal(full[BLOCK:], blocked_uniform(0, 5, n, 2)[BLOCK:])
