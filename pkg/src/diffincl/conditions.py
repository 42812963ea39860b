"""Checkers for the path conditions on a region and a solution set, the
alternating-witness construction and the loop/region construction around a
hyperbolic fixed point.

RS1: every ordered pair of points of ``V`` is joined by a simple path in
``V``.  RS2: some solution stays in ``V`` without being dense in it.  BV3:
every chain of RS1 paths concatenates into a single solution.  The
checkers sample instances; RS1 and BV3 reports pass only if every instance
does, RS2 (an existence statement) as soon as one candidate qualifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import shapely

from .core import DEFAULT_TOL, Branch, BranchField, Inclusion, Region, RegionKind, Tolerances, \
    as_point, complement_unbounded
from .errors import ClosureError, ConcatenationError, GeometryError, NoEventError, ParameterError, \
    SearchExhaustedError
from .integrator import PointTarget, Section, Segment, march
from .path import EnsembleGenerator, FlowGenerator, PathCurve, PathGenerator, concatenate, is_simple
from .solution import Ensemble, SolutionWindow, retime, verify_inclusion


@dataclass
class ConditionReport:
    tag: str
    instances: list
    seed: Optional[int] = None
    witness: Optional[object] = None
    extra: dict = field(default_factory=dict)
    #: "all" instances must pass, or "any" one (existence conditions)
    mode: str = "all"

    @property
    def n(self) -> int:
        return len(self.instances)

    @property
    def n_passed(self) -> int:
        return sum(1 for i in self.instances if i["pass"])

    @property
    def passed(self) -> bool:
        if self.mode == "any":
            return self.n_passed > 0
        return self.n > 0 and self.n_passed == self.n

    def failures(self) -> list:
        return [i for i in self.instances if not i["pass"]]

    def to_json(self) -> dict:
        return {"condition": self.tag, "pass": self.passed, "mode": self.mode, "seed": self.seed,
                "instances": self.instances, "n_instances": self.n, "n_passed": self.n_passed,
                **self.extra}


# --- sampling ---------------------------------------------------------------

def sample_region(V: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points spread over the region: uniform in arclength on curves,
    uniform in area (by rejection) on polygons."""
    if n <= 0:
        return np.zeros((0, 2))
    if V.kind is RegionKind.POLYGON:
        x0, y0, x1, y1 = V.bounds
        out = []
        while len(out) < n:
            cand = np.column_stack([rng.uniform(x0, x1, 4 * n), rng.uniform(y0, y1, 4 * n)])
            out.extend(cand[np.asarray(shapely.contains_xy(V._geom, cand[:, 0], cand[:, 1]))])
        return np.array(out[:n])
    if V.kind is RegionKind.SEGMENT_CHAIN:
        geom = V._geom
        if geom.geom_type == "Point":
            return np.repeat(V.vertices[:1], n, axis=0)
        u = rng.uniform(0.0, geom.length, n)
        return np.array([geom.interpolate(d).coords[0] for d in u])
    lengths = np.array([arc.length for arc in V.arcs])
    which = rng.choice(len(V.arcs), size=n, p=lengths / lengths.sum())
    u = rng.uniform(0.0, 1.0, n)
    return np.array([V.arcs[k].point_at(uk) for k, uk in zip(which, u)])


def _forced_points(generator: PathGenerator, V: Region, rng, k: int) -> List[np.ndarray]:
    """Points where naive constructions fail: on the reference loop (flow
    generators) or at the switch set (ensemble generators)."""
    if isinstance(generator, FlowGenerator):
        ts = generator.loop.times
        idx = rng.choice(len(ts), size=k, replace=False)
        return [generator.loop.states[i] for i in idx]
    if generator.switch_set is not None and len(generator.switch_set):
        return [p for p in generator.switch_set if V.contains(p)]
    return []


def _distinct(a, b, tol) -> bool:
    return np.linalg.norm(as_point(a) - as_point(b)) > 10 * tol.match_tol


def _pairs(V: Region, generator, n_pairs: int, rng, tol):
    """Ordered pairs: forced corner cases first, then quasi-uniform ones."""
    forced = _forced_points(generator, V, rng, 6)
    free = sample_region(V, max(2 * n_pairs, 4), rng)
    pairs, kinds = [], []
    if forced:
        for i in range(len(forced)):
            j = (i + 1) % len(forced)
            if _distinct(forced[i], forced[j], tol):
                pairs.append((forced[i], forced[j]))
                kinds.append("both-on-loop" if isinstance(generator, FlowGenerator) else "both-special")
        for i, p in enumerate(forced):
            pairs.append((p, free[i]))
            kinds.append("on-off")
            pairs.append((free[-1 - i], p))
            kinds.append("off-on")
    k = 0
    while len(pairs) < n_pairs and k + 1 < len(free):
        if _distinct(free[k], free[k + 1], tol):
            pairs.append((free[k], free[k + 1]))
            kinds.append("free")
        k += 2
    return pairs[:max(n_pairs, 1)], kinds[:max(n_pairs, 1)]


# --- RS1 ----------------------------------------------------------------------

def find_simple_path(generator: PathGenerator, a, b, V: Optional[Region] = None,
                     tol: Tolerances = DEFAULT_TOL, allow_loop: bool = True) -> PathCurve:
    """A simple path from ``a`` to ``b`` inside ``V`` produced by ``generator``."""
    if V is not None:
        for p, name in ((a, "a"), (b, "b")):
            if not V.contains(p):
                raise ParameterError(f"{name} = {tuple(as_point(p))} is not in the region")
    return generator.find(a, b, V, tol, allow_loop=allow_loop)


def _path_record(path: PathCurve, tol) -> dict:
    rep = is_simple(path, tol)
    return {"source": path.source_id, "t0": path.t0, "t1": path.t1, "duration": path.duration,
            "switches": rep.switch_count, "simple": rep.simple}


def check_RS1(V: Region, generator: PathGenerator, n_pairs: int = 30, seed: int = 0,
              tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """Sample ordered pairs of ``V`` and look for simple paths between them."""
    rng = np.random.default_rng(seed)
    pairs, kinds = _pairs(V, generator, n_pairs, rng, tol)
    instances = []
    for (a, b), kind in zip(pairs, kinds):
        inst = {"a": [float(a[0]), float(a[1])], "b": [float(b[0]), float(b[1])], "kind": kind}
        try:
            path = find_simple_path(generator, a, b, V, tol)
            simple = is_simple(path, tol).simple
            inside = bool(np.all(V.contains_all(path.states)))
            inst.update(_path_record(path, tol), inside=inside, **{"pass": simple and inside})
        except (SearchExhaustedError, ParameterError, NoEventError) as exc:
            inst.update({"pass": False, "error": str(exc)})
        instances.append(inst)
    return ConditionReport("RS1", instances, seed, extra={"generator": generator.name})


# --- RS2 ----------------------------------------------------------------------

def largest_free_ball(V: Region, image: np.ndarray, rng: np.random.Generator, require_inside: bool,
                      n_candidates: int = 4000):
    """Search sample centres ``c`` in ``V`` for the largest radius such that
    the open disc around ``c`` misses the curve ``image`` (and, when
    ``require_inside``, lies inside ``V``).  Returns ``(c, radius)``."""
    cands = np.concatenate([sample_region(V, n_candidates, rng), V.outline])
    geom = shapely.LineString(image) if len(image) > 1 else shapely.Point(image[0])
    d_img = np.asarray(shapely.distance(geom, shapely.points(cands)), dtype=float)
    if require_inside:
        d_img = np.minimum(d_img, V.interior_radius(cands))
    k = int(np.argmax(d_img))
    return cands[k], float(d_img[k])


def check_RS2(V: Region, candidates: Sequence[SolutionWindow], tol: Tolerances = DEFAULT_TOL,
              min_radius: Optional[float] = None, require_inside: bool = False, seed: int = 0,
              ids: Optional[Sequence[str]] = None) -> ConditionReport:
    """Look for a candidate solution that stays in ``V`` and misses a disc.

    A candidate passes when all its samples lie in ``V`` and some centre
    ``c`` in ``V`` has a disc of radius at least ``min_radius`` (default
    ``event_tol``) disjoint from its image.  With ``require_inside`` the disc
    must also lie inside ``V``; otherwise it is taken relative to ``V``,
    which is the only option for regions without interior.
    """
    rng = np.random.default_rng(seed)
    r_min = tol.event_tol if min_radius is None else min_radius
    ids = list(ids) if ids is not None else [c.name or f"w{k}" for k, c in enumerate(candidates)]
    instances, witness = [], None
    for wid, w in zip(ids, candidates):
        inside = bool(np.all(V.contains_all(w.states)))
        c, r = largest_free_ball(V, w.states, rng, require_inside)
        ok = inside and r >= r_min
        instances.append({"candidate": wid, "inside": inside, "center": [float(c[0]), float(c[1])],
                          "radius": r, "pass": ok})
        if ok and witness is None:
            witness = (wid, w, c, r)
    # RS2 asks for one witness, not for every candidate to qualify
    return ConditionReport("RS2", instances, seed, witness,
                           extra={"min_radius": r_min, "require_inside": require_inside}, mode="any")


# --- BV3 ----------------------------------------------------------------------

def check_BV3(V: Region, generator: PathGenerator, inc: Inclusion, n_chains: int = 20, max_len: int = 4,
              seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """Sample chains of 2..``max_len`` RS1 paths with shared junctions and
    check that each concatenates into one admissible solution.  The first
    chain is always a back-and-forth pair ``a -> b -> a``."""
    rng = np.random.default_rng(seed)
    instances = []
    joins = {"same-branch": 0, "switch": 0}
    for k in range(n_chains):
        if k == 0:
            a, b = sample_region(V, 2, rng)
            pts = [a, b, a]
        else:
            length = int(rng.integers(2, max_len + 1))
            pts = list(sample_region(V, length + 1, rng))
        inst = {"points": [[float(p[0]), float(p[1])] for p in pts], "length": len(pts) - 1}
        try:
            paths = [find_simple_path(generator, p, q, V, tol) for p, q in zip(pts, pts[1:])]
        except (SearchExhaustedError, ParameterError, NoEventError) as exc:
            inst.update({"pass": False, "error": f"missing RS1 path: {exc}"})
            instances.append(inst)
            continue
        kinds = ["same-branch" if p.last_branch == q.first_branch else "switch"
                 for p, q in zip(paths, paths[1:])]
        inst["junctions"] = kinds
        try:
            q, witness = concatenate(paths, tol, switch_set=generator.switch_set)
        except ConcatenationError as exc:
            inst.update({"pass": False, "error": str(exc), "junction": exc.junction})
            instances.append(inst)
            continue
        for kind in kinds:
            joins[kind] += 1
        rep = verify_inclusion(witness, inc, tol)
        inst.update({"pass": rep.ok, "max_residual": rep.max_residual, "duration": q.duration})
        instances.append(inst)
    return ConditionReport("BV3", instances, seed,
                           extra={"generator": generator.name, "junction_types": joins})


# --- alternating witness ------------------------------------------------------

def build_alternating_witness(p_ab: PathCurve, p_ba: PathCurve, k_max: int,
                              tol: Tolerances = DEFAULT_TOL) -> SolutionWindow:
    """Follow ``p_ab`` then ``p_ba`` ``k_max`` times starting at t = 0, so
    the state is ``a`` at every ``k (t_ab + t_ba)`` and ``b`` at every
    ``(k + 1) t_ab + k t_ba``."""
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    if np.linalg.norm(p_ab.b - p_ba.a) > tol.match_tol:
        raise ConcatenationError("first path does not end where the second starts", junction=0)
    if np.linalg.norm(p_ba.b - p_ab.a) > tol.match_tol:
        raise ConcatenationError("second path does not return to the start", junction=1)
    _, witness = concatenate([p_ab, p_ba] * k_max, tol)
    out = retime(witness, -witness.lo)
    return SolutionWindow(out.segments, out.window, "concatenation", "alternating-witness")


# --- loop around a hyperbolic point -------------------------------------------

@dataclass
class FixedPointConstruction:
    loop: SolutionWindow
    P: PathCurve
    V: Region
    a_star: np.ndarray
    a: np.ndarray
    landing: np.ndarray
    closure_gap: float
    simple: bool
    complement_unbounded: bool

    @property
    def tau(self) -> float:
        return self.loop.hi - self.loop.lo


def construct_V_from_fixed_point(inc: Inclusion, a_star, a, tol: Tolerances = DEFAULT_TOL,
                                 K: Optional[Region] = None, horizon: float = 50.0) -> FixedPointConstruction:
    """Build a simple loop ``P`` from ``a`` to ``a`` and the region it bounds.

    The first branch (with the hyperbolic point ``a_star``) carries ``a``
    inward: until it crosses back through the line through ``a`` transverse
    to the flow, or, when the flow at ``a`` points straight at ``a_star``,
    until a quarter of the way from ``a_star`` to ``a``.  The second branch
    then carries the state back to ``a``.  ``V`` is the loop together with
    the bounded components of its complement (the filled polygon), or the
    loop itself when that fill has no area.
    """
    a_star, a = as_point(a_star), as_point(a)
    if np.linalg.norm(a - a_star) <= tol.match_tol:
        raise ParameterError("the loop base point must differ from the fixed point")
    if K is not None and not K.contains(a):
        raise ParameterError("the base point lies outside the declared region")
    f1, f2 = inc.field(Branch.BRANCH1), inc.field(Branch.BRANCH2)
    u = (a - a_star) / np.linalg.norm(a - a_star)
    v = f1(a)
    normal = v - np.dot(v, u) * u
    if np.linalg.norm(normal) > 1e-9 * max(1.0, np.linalg.norm(v)):
        event = Section(tuple(a), tuple(normal))
    else:
        event = PointTarget(tuple(a_star + 0.25 * (a - a_star)))
    s1, x1, hit = march(f1, a, horizon, tol, event=event)
    if not hit:
        raise ClosureError("the first branch did not return to the section", gap=None)
    landing = x1[-1].copy()
    s2, x2, hit = march(f2, landing, horizon, tol, event=PointTarget(tuple(a)))
    if not hit:
        gap = float(np.min(np.linalg.norm(x2 - a, axis=1)))
        raise ClosureError(f"the second branch misses the base point by {gap:.3g}", gap=gap)
    gap = float(np.linalg.norm(x2[-1] - a))
    seg1 = Segment(Branch.BRANCH1, s1, x1)
    seg2 = Segment(Branch.BRANCH2, s1[-1] + s2, x2)
    loop = SolutionWindow((seg1, seg2), (0.0, seg2.t_end), "event-rule", "P")
    P = PathCurve(loop, 0.0, loop.hi, "P")
    simple = is_simple(P, tol).simple
    pts = loop.states
    if shapely.LineString(pts).distance(shapely.Point(*a_star)) <= tol.match_tol:
        raise GeometryError("the loop passes through the fixed point")
    ring = np.concatenate([pts[:-1], pts[:1]])
    poly = shapely.Polygon(ring)
    if poly.is_valid and poly.area > 1e-9:
        V = Region(RegionKind.POLYGON, ring[:-1], tol=1e-7)
    else:
        V = Region(RegionKind.SEGMENT_CHAIN, pts, tol=1e-7)
    cu = complement_unbounded(V)
    return FixedPointConstruction(loop, P, V, a_star, a, landing, gap, simple, cu)


def lemma36_witness(construction: FixedPointConstruction, generator: PathGenerator, a_bar, b_bar,
                    k_max: int = 3, tol: Tolerances = DEFAULT_TOL, min_radius: float = 0.01,
                    seed: int = 0):
    """RS2 derived from RS1 and BV3: alternate two simple paths between
    ``a_bar`` and ``b_bar`` and certify a disc inside ``V`` that the
    resulting solution never enters.  Returns ``(witness, report)``."""
    V = construction.V
    p_ab = find_simple_path(generator, a_bar, b_bar, V, tol)
    p_ba = find_simple_path(generator, b_bar, a_bar, V, tol)
    w = build_alternating_witness(p_ab, p_ba, k_max, tol)
    rep = check_RS2(V, [w], tol, min_radius=min_radius, require_inside=True, seed=seed,
                    ids=["alternating-witness"])
    return w, rep
