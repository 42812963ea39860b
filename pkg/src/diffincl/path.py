"""Paths generated by solutions, simplicity checks and concatenation.

A path is the curve ``{v(t) : t0 <= t <= t1}`` traced by a solution ``v``
between two anchor points, oriented by increasing time.  Two generators
produce paths on request:

* :class:`EnsembleGenerator` reads paths off the members of a finite
  ensemble (visits of ``a`` followed by the next visit of ``b``);
* :class:`FlowGenerator` builds them from the branch flows, either by
  direct single-branch flow or through a reference loop ``P``: flow by the
  second branch from ``a`` onto ``P``, along ``P``, and off ``P`` to ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import shapely

from .core import DEFAULT_TOL, Branch, Inclusion, Region, Tolerances, as_point
from .errors import ConcatenationError, NoEventError, BlowUpError, SearchExhaustedError
from .integrator import PointTarget, Segment, march
from .solution import Ensemble, SolutionWindow, eval_many, restrict, retime, splice, tile_periodic


@dataclass(frozen=True, eq=False)
class PathCurve:
    """The piece of ``source`` between times ``t0 < t1``."""

    source: SolutionWindow
    t0: float
    t1: float
    source_id: str = ""

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError(f"need t0 < t1, got {self.t0}, {self.t1}")
        if self.t0 < self.source.lo - 1e-9 or self.t1 > self.source.hi + 1e-9:
            raise ValueError("path times outside the source window")
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))
        if not self.source_id:
            object.__setattr__(self, "source_id", self.source.name)

    @property
    def a(self) -> np.ndarray:
        return self.source(self.t0)

    @property
    def b(self) -> np.ndarray:
        return self.source(self.t1)

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @property
    def piece(self) -> SolutionWindow:
        """The source restricted to ``[t0, t1]``."""
        return restrict(self.source, max(self.t0, self.source.lo), min(self.t1, self.source.hi))

    @property
    def times(self) -> np.ndarray:
        return self.piece.times

    @property
    def states(self) -> np.ndarray:
        return self.piece.states

    @property
    def switch_count(self) -> int:
        return len(self.piece.switch_times)

    @property
    def first_branch(self) -> Branch:
        return self.piece.segments[0].branch

    @property
    def last_branch(self) -> Branch:
        return self.piece.segments[-1].branch

    def __call__(self, t):
        return self.source(t)


@dataclass
class SimplicityReport:
    simple: bool
    switch_count: int
    revisit_times: list = field(default_factory=list)

    def __bool__(self):
        return self.simple


def _edge_distance(xs: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Distance from ``p`` to each polyline edge ``xs[k] -> xs[k+1]``."""
    e = xs[1:] - xs[:-1]
    w = p - xs[:-1]
    ee = np.einsum("ij,ij->i", e, e)
    u = np.clip(np.einsum("ij,ij->i", w, e) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    return np.linalg.norm(xs[:-1] + u[:, None] * e - p, axis=1), u


def curve_visits(times: np.ndarray, states: np.ndarray, p, tol: float) -> np.ndarray:
    """Times at which the polyline passes within ``tol`` of ``p``; one time
    (the closest approach) per contiguous run of nearby edges."""
    p = as_point(p)
    if len(times) < 2:
        return np.array([])
    dist, u = _edge_distance(states, p)
    near = dist <= tol
    if not np.any(near):
        return np.array([])
    idx = np.nonzero(near)[0]
    runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
    out = []
    for run in runs:
        k = run[np.argmin(dist[run])]
        out.append(times[k] + u[k] * (times[k + 1] - times[k]))
    return np.array(out)


def is_simple(path: PathCurve, tol: Tolerances = DEFAULT_TOL) -> SimplicityReport:
    """A path is simple when its interior stays away from both endpoints.

    The leading run of edges still within ``match_tol`` of ``a`` (the
    departure) and the trailing run near ``b`` (the arrival) are not counted
    as revisits.  The switch count is always finite on a finite window and is
    reported for information.
    """
    ts, xs = path.times, path.states
    revisits = []
    for p, skip_head, skip_tail in ((path.a, True, False), (path.b, False, True), ):
        dist, u = _edge_distance(xs, p)
        near = dist <= tol.match_tol
        lo, hi = 0, len(near)
        if skip_head:
            while lo < hi and near[lo]:
                lo += 1
        if skip_tail:
            while hi > lo and near[hi - 1]:
                hi -= 1
        # a loop (a == b) departs from and arrives at the same point
        if np.linalg.norm(path.a - path.b) <= tol.match_tol:
            while lo < hi and near[lo]:
                lo += 1
            while hi > lo and near[hi - 1]:
                hi -= 1
        bad = np.nonzero(near[lo:hi])[0] + lo
        revisits.extend(float(ts[k] + u[k] * (ts[k + 1] - ts[k])) for k in bad)
    revisits = sorted(set(round(t, 12) for t in revisits))
    return SimplicityReport(not revisits, path.switch_count, revisits)


# --- generators -------------------------------------------------------------

class PathGenerator:
    """Interface: ``find(a, b, region, tol)`` returns a :class:`PathCurve`."""

    #: points where a branch change is admissible; None means anywhere
    switch_set: Optional[np.ndarray] = None
    name = "generator"

    def allows_switch(self, p, tol: Tolerances = DEFAULT_TOL) -> bool:
        if self.switch_set is None:
            return True
        if len(self.switch_set) == 0:
            return False
        return bool(np.min(np.linalg.norm(self.switch_set - as_point(p), axis=1)) <= tol.match_tol)

    def find(self, a, b, region: Optional[Region] = None, tol: Tolerances = DEFAULT_TOL,
             allow_loop: bool = True) -> PathCurve:
        raise NotImplementedError


def _inside(path: PathCurve, region: Optional[Region]) -> bool:
    return region is None or bool(np.all(region.contains_all(path.states)))


def _check_candidate(path: PathCurve, region, tol) -> Optional[str]:
    if not _inside(path, region):
        return "leaves region"
    if not is_simple(path, tol).simple:
        return "not simple"
    return None


class EnsembleGenerator(PathGenerator):
    """Paths read off the members of an ensemble.

    ``switch_set`` is ``"auto"`` (the switch points used by the members),
    None (switching allowed anywhere) or an explicit ``(k, 2)`` array.
    """

    def __init__(self, ensemble: Ensemble, switch_set="auto", name: str = ""):
        self.ensemble = ensemble
        self.name = name or f"ensemble:{ensemble.name}"
        if isinstance(switch_set, str) and switch_set == "auto":
            pts = [m.switch_points for m in ensemble.members if len(m.switch_points)]
            switch_set = _unique_points(np.concatenate(pts)) if pts else np.zeros((0, 2))
        self.switch_set = None if switch_set is None else np.asarray(switch_set, dtype=float).reshape(-1, 2)

    def find(self, a, b, region=None, tol=DEFAULT_TOL, allow_loop=True) -> PathCurve:
        a, b = as_point(a), as_point(b)
        same = np.linalg.norm(a - b) <= tol.match_tol
        if same and not allow_loop:
            raise SearchExhaustedError("a == b and loops are not allowed", frontier=[])
        frontier = []
        for mid, m in zip(self.ensemble.ids, self.ensemble.members):
            va = curve_visits(m.times, m.states, a, tol.match_tol)
            vb = va if same else curve_visits(m.times, m.states, b, tol.match_tol)
            if not len(va) or not len(vb):
                frontier.append((mid, "endpoint not visited"))
                continue
            # each visit of a paired with the next visit of b; shortest first
            cands = sorted((tb - ta, ta, tb) for ta in va for tb in vb[vb > ta + 1e-9][:1])
            if not cands:
                frontier.append((mid, "no later visit"))
                continue
            for _, ta, tb in cands:
                path = PathCurve(m, ta, tb, mid)
                why = _check_candidate(path, region, tol)
                if why is None:
                    return path
                frontier.append((mid, float(ta), float(tb), why))
        raise SearchExhaustedError(f"no path from {a} to {b} in {self.name}", frontier=frontier)


def _unique_points(pts: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    out: List[np.ndarray] = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= tol for q in out):
            out.append(p)
    return np.array(out).reshape(-1, 2)


def _segment_window(branch, t, xs) -> SolutionWindow:
    seg = Segment(branch, t, xs)
    return SolutionWindow((seg,), (seg.t_start, seg.t_end), "path")


class FlowGenerator(PathGenerator):
    """Paths built from the branch flows and a reference loop.

    ``loop`` is one period of a closed solution (its window is ``[0, tau]``
    and it returns to its start).  Switching is unrestricted unless
    ``switch_set`` is given.
    """

    def __init__(self, inc: Inclusion, loop: SolutionWindow, region: Optional[Region] = None,
                 switch_set=None, horizon: Optional[float] = None, name: str = "flow"):
        self.inc = inc
        self.loop = loop
        self.region = region
        self.tau = loop.hi - loop.lo
        self.horizon = 1.5 * self.tau if horizon is None else horizon
        # time for the second branch to cross the loop's bounding box
        pts = loop.states
        speed = float(np.min(np.linalg.norm(eval_many(inc.field(Branch.BRANCH2), pts), axis=1)))
        diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        self.exit_horizon = min(self.horizon, 2.0 * diam / speed) if speed > 0 else self.horizon
        self.name = name
        self.switch_set = None if switch_set is None else np.asarray(switch_set, dtype=float).reshape(-1, 2)
        self._loop_line = shapely.LineString(loop.states)
        self._tiled = None

    @property
    def tiled(self) -> SolutionWindow:
        """Three consecutive periods of the loop on ``[0, 3 tau]``."""
        if self._tiled is None:
            self._tiled = tile_periodic(retime(self.loop, -self.loop.lo), (0.0, 3 * self.tau), name="loop")
        return self._tiled

    def on_loop(self, p, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self._loop_line.distance(shapely.Point(*as_point(p))) <= tol.match_tol

    def loop_times(self, p, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
        """Loop times in ``[0, tau)`` at which the loop passes through ``p``."""
        ts = self.loop.times - self.loop.lo
        vis = curve_visits(ts, self.loop.states, p, tol.match_tol) % self.tau
        vis = np.where(self.tau - vis <= 1e-9, 0.0, vis)
        return np.unique(np.round(vis, 10))

    # single-branch flows --------------------------------------------------

    def _direct(self, a, b, tol) -> List[PathCurve]:
        out = []
        for f in self.inc:
            try:
                s, xs, hit = march(f, a, self.horizon, tol, event=PointTarget(tuple(b)), max_misses=2)
            except BlowUpError:
                continue
            if hit and len(s) >= 2:
                out.append(PathCurve(_segment_window(f.label, s, xs), 0.0, float(s[-1]), f"direct:{f.label.name}"))
        return out

    def _flow_to_loop(self, p, tol, backward: bool):
        """Flow by the second branch from ``p`` (backward in time when
        ``backward``) until the trajectory meets the loop; returns the elapsed
        times, states and the meeting point."""
        f = self.inc.field(Branch.BRANCH2)
        s, xs, _ = march(f, p, self.exit_horizon, tol, backward=backward)
        line = shapely.LineString(xs)
        hit = line.intersection(self._loop_line)
        pts = [g for g in getattr(hit, "geoms", [hit]) if not g.is_empty]
        pts = [q for g in pts for q in (g.coords if g.geom_type != "Point" else [g.coords[0]])]
        arclen = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(xs, axis=0), axis=1))])
        best = None
        for q in pts:
            d = line.project(shapely.Point(q))
            if d > tol.match_tol and (best is None or d < best[0]):
                best = (d, q)
        if best is None:
            raise SearchExhaustedError("second-branch flow does not meet the loop", frontier=[tuple(p)])
        t_hit = float(np.interp(best[0], arclen, s))
        k = int(np.searchsorted(s, t_hit))
        s_out = np.concatenate([s[:k], [t_hit]])
        x_out = np.concatenate([xs[:k], [as_point(best[1])]])
        if len(s_out) >= 2 and s_out[-1] - s_out[-2] < 1e-12:
            s_out, x_out = np.delete(s_out, -2), np.delete(x_out, -2, axis=0)
        return s_out, x_out

    def _via_loop(self, a, b, tol) -> List[PathCurve]:
        f2 = Branch.BRANCH2
        pieces_in, pieces_out = None, None
        if self.on_loop(a, tol):
            c_p = a
        else:
            s_in, x_in = self._flow_to_loop(a, tol, backward=False)
            c_p = x_in[-1]
            pieces_in = (s_in, x_in)
        if self.on_loop(b, tol):
            d_p = b
        else:
            s_out, x_out = self._flow_to_loop(b, tol, backward=True)
            d_p = x_out[-1]
            pieces_out = (s_out[-1] - s_out[::-1], x_out[::-1])
        entries = self.loop_times(c_p, tol)
        exits = self.loop_times(d_p, tol)
        cands = []
        same = np.linalg.norm(c_p - d_p) <= tol.match_tol
        for te in entries:
            if same and (pieces_in is not None or pieces_out is not None):
                cands.append((0.0, te, te))
            later = np.concatenate([exits, exits + self.tau])
            later = later[later > te + 1e-9]
            if len(later):
                cands.append((later[0] - te, te, later[0]))
        cands.sort()
        out = []
        for _, te, tx in cands:
            parts, t = [], 0.0
            if pieces_in is not None:
                parts.append(_segment_window(f2, pieces_in[0], pieces_in[1]))
                t = pieces_in[0][-1]
            if tx > te:
                parts.append(retime(restrict(self.tiled, te, tx), t - te))
                t += tx - te
            if pieces_out is not None:
                parts.append(_segment_window(f2, t + pieces_out[0], pieces_out[1]))
            if not parts:
                continue
            src = splice(parts, provenance="path", name="loop-route")
            out.append(PathCurve(src, src.lo, src.hi, "loop-route"))
        return out

    def find(self, a, b, region=None, tol=DEFAULT_TOL, allow_loop=True) -> PathCurve:
        a, b = as_point(a), as_point(b)
        region = region if region is not None else self.region
        frontier = []
        if np.linalg.norm(a - b) <= tol.match_tol:
            if not allow_loop:
                raise SearchExhaustedError("a == b and loops are not allowed", frontier=[])
            return self._loop_through(a, region, tol)
        try:
            direct = self._direct(a, b, tol)
        except NoEventError:
            direct = []
        for path in direct:
            why = _check_candidate(path, region, tol)
            if why is None:
                return path
            frontier.append((path.source_id, why))
        try:
            routes = self._via_loop(a, b, tol)
        except SearchExhaustedError as exc:
            frontier.extend(exc.frontier)
            routes = []
        for path in routes:
            why = _check_candidate(path, region, tol)
            if why is None:
                return path
            frontier.append((path.source_id, path.t0, path.t1, why))
        raise SearchExhaustedError(f"no simple path from {a} to {b}", frontier=frontier)

    def _loop_through(self, a, region, tol) -> PathCurve:
        """A closed path from ``a`` back to ``a``."""
        if self.on_loop(a, tol):
            te = self.loop_times(a, tol)[0]
            return PathCurve(retime(restrict(self.tiled, te, te + self.tau), -te), 0.0, self.tau, "loop")
        # leave along the loop route to the loop's base point and come back
        base = self.loop.states[0]
        first = self.find(a, base, region, tol)
        second = self.find(base, a, region, tol)
        q, _ = concatenate([first, second], tol)
        return q


# --- concatenation ----------------------------------------------------------

def concatenate(paths: Sequence[PathCurve], tol: Tolerances = DEFAULT_TOL,
                switch_set=None, retime_paths: bool = True):
    """Join paths end to start into one path and its generating solution.

    Returns ``(q, witness)``.  Consecutive paths must meet in state within
    ``match_tol``; with ``retime_paths=False`` they must also meet in time.
    A branch change at a junction is only admissible where ``switch_set``
    allows it (None = anywhere).  Violations raise
    :class:`ConcatenationError` naming the junction index.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("nothing to concatenate")
    if len(paths) == 1:
        p = paths[0]
        return p, p.source
    switch_set = None if switch_set is None else np.asarray(switch_set, dtype=float).reshape(-1, 2)
    for k, (p, q) in enumerate(zip(paths, paths[1:])):
        gap = float(np.linalg.norm(p.b - q.a))
        if gap > tol.match_tol:
            raise ConcatenationError(f"junction {k}: paths are {gap:.3g} apart", junction=k)
        if not retime_paths and abs(p.t1 - q.t0) > 1e-9:
            raise ConcatenationError(f"junction {k}: times {p.t1} and {q.t0} differ", junction=k)
        if p.last_branch != q.first_branch and switch_set is not None:
            ok = len(switch_set) and np.min(np.linalg.norm(switch_set - p.b, axis=1)) <= tol.match_tol
            if not ok:
                raise ConcatenationError(
                    f"junction {k}: switch {p.last_branch.name}->{q.first_branch.name} at "
                    f"({p.b[0]:.6g}, {p.b[1]:.6g}) is not allowed", junction=k)
    parts, t = [], paths[0].t0
    for p in paths:
        piece = p.piece
        parts.append(retime(piece, t - p.t0) if retime_paths else piece)
        t += p.duration
    witness = splice(parts, provenance="concatenation", name="concatenation")
    return PathCurve(witness, witness.lo, witness.hi, "concatenation"), witness
