import json

import numpy as np

from diffincl import io
from diffincl.metric import distance_matrix
from diffincl.path import PathCurve


def test_solution_round_trip(tmp_path, cex_w):
    sol = cex_w.S[3]
    path = io.write_solution(sol, tmp_path, "s3", {"seed": 7})
    doc = json.loads(path.read_text())
    assert doc["seed"] == 7 and doc["window"] == [-40.0, 40.0]
    back = io.read_solution(path)
    t = np.linspace(-40, 40, 333)
    np.testing.assert_array_equal(back(t), sol(t))
    np.testing.assert_array_equal(back.switch_times, sol.switch_times)


def test_ensemble_manifest_round_trip(tmp_path, cex_u):
    manifest = io.write_ensemble(cex_u.X0, tmp_path)
    back = io.read_ensemble(manifest)
    assert back.ids == cex_u.X0.ids
    np.testing.assert_array_equal(back[2].states, cex_u.X0[2].states)


def test_path_json(tmp_path, cex_u):
    p = PathCurve(cex_u.X["x_c1"], 0.1, 0.6)
    doc = json.loads(io.write_path(p, tmp_path, "p").read_text())
    assert doc["simple"] is True and doc["source_solution"] == "x_c1"
    assert (tmp_path / doc["samples_csv"]).exists()


def test_matrix_csv_with_sidecar(tmp_path, cex_w):
    M = distance_matrix(cex_w.S)
    io.write_matrix(M, cex_w.S.ids, tmp_path / "m.csv", {"grid": 0.01})
    ids, back = io.read_matrix(tmp_path / "m.csv")
    assert ids == cex_w.S.ids
    np.testing.assert_array_equal(back, M)
    assert json.loads((tmp_path / "m.json").read_text()) == {"grid": 0.01}


def test_json_is_deterministic(tmp_path):
    obj = {"b": np.float64(0.1), "a": [np.int64(1), np.bool_(True)], "c": np.arange(3)}
    io.write_json(obj, tmp_path / "x.json")
    io.write_json(dict(reversed(list(obj.items()))), tmp_path / "y.json")
    assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()
