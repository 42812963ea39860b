"""File formats: solutions, ensembles, paths, distance matrices, reports.

A solution is a JSON file naming its window, provenance and switch times
plus one CSV per segment (columns ``t, x1, x2, branch``).  An ensemble
manifest lists member solution files relative to the manifest.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DEFAULT_TOL
from .errors import ParameterError
from .integrator import Segment
from .path import PathCurve, is_simple
from .solution import Ensemble, SolutionWindow


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(obj, path) -> Path:
    """Deterministic JSON: sorted keys, full double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_solution(sol: SolutionWindow, directory, stem: Optional[str] = None, extra: Optional[dict] = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = stem or sol.name or "solution"
    files = []
    for k, seg in enumerate(sol.segments):
        name = f"{stem}_seg{k:03d}.csv"
        seg.write_csv(directory / name)
        files.append(name)
    doc = {"name": sol.name, "window": list(sol.window), "provenance": sol.provenance,
           "switch_times": [float(t) for t in sol.switch_times], "segments": files}
    if extra:
        doc.update(extra)
    return write_json(doc, directory / f"{stem}.json")


def read_solution(path) -> SolutionWindow:
    path = Path(path)
    doc = read_json(path)
    segs = tuple(Segment.read_csv(path.parent / f) for f in doc["segments"])
    return SolutionWindow(segs, tuple(doc["window"]), doc.get("provenance", "file"), doc.get("name", path.stem))


def write_ensemble(E: Ensemble, directory, extra: Optional[dict] = None) -> Path:
    directory = Path(directory)
    members = []
    for mid, m in zip(E.ids, E.members):
        write_solution(m, directory / "members", mid)
        members.append({"id": mid, "file": f"members/{mid}.json"})
    doc = {"name": E.name, "members": members}
    if extra:
        doc.update(extra)
    return write_json(doc, directory / "manifest.json")


def read_ensemble(path) -> Ensemble:
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"ensemble manifest {path} not found")
    doc = read_json(path)
    members = tuple(read_solution(path.parent / m["file"]).with_name(m["id"]) for m in doc["members"])
    return Ensemble(members, doc.get("name", path.stem))


def write_path(path: PathCurve, directory, stem: str, tol=None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_name = f"{stem}_samples.csv"
    with open(directory / csv_name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x1", "x2"])
        for t, (a, b) in zip(path.times, path.states):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(b))])
    simple = is_simple(path, tol or DEFAULT_TOL).simple
    doc = {"a": path.a, "b": path.b, "t0": path.t0, "t1": path.t1, "samples_csv": csv_name,
           "source_solution": path.source_id or path.source.name, "simple": simple}
    return write_json(doc, directory / f"{stem}.json")


def write_matrix(M: np.ndarray, ids, path, sidecar: dict) -> Path:
    """Distance matrix CSV with ids as header row and first column, plus a
    JSON sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + list(ids))
        for i, row in zip(ids, M):
            w.writerow([i] + [repr(float(v)) for v in row])
    write_json(sidecar, path.with_suffix(".json"))
    return path


def read_matrix(path):
    rows = list(csv.reader(open(path, newline="")))
    ids = rows[0][1:]
    M = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return ids, M
