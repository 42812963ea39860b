"""Shipped model instances and the name registry.

* ``u-segment``: two opposite unit fields bouncing on the unit segment
  ``U = [c1, c2]`` (and on its right half ``U0 = [c0, c2]``);
* ``lens-w``: two clockwise rotations whose arcs meet at ``c1 = (-1, 0)``
  and ``c2 = (1, 0)`` and bound a lens;
* ``thm24-spiral`` / ``thm24-axis``: a hyperbolic sink for the first branch
  and a constant jet for the second;
* ``islm-qyml``: the linear recession (IS-LM) / expansion (QY-ML) model.

All fields accept a single point or an ``(n, 2)`` array.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Dict, Optional

import numpy as np

from .conditions import FixedPointConstruction, construct_V_from_fixed_point
from .core import DEFAULT_TOL, Arc, Branch, BranchField, Inclusion, Region, RegionKind, Tolerances, as_point
from .errors import ParameterError
from .integrator import PointTarget, Section, Segment, flow_segment, march
from .path import FlowGenerator
from .solution import (DEFAULT_T_WIN, Ensemble, EventRule, SolutionWindow, build_from_events,
                       one_period_from_events, retime, splice, tile_periodic)


def constant_field(label: Branch, v, name: str = "") -> BranchField:
    v = np.asarray(v, dtype=float)
    def func(x):
        return v.copy() if np.ndim(x) == 1 else np.tile(v, (len(x), 1))
    return BranchField(label, func, lambda x: np.zeros((2, 2)), name)


def affine_field(label: Branch, A, c=(0.0, 0.0), name: str = "") -> BranchField:
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    return BranchField(label, lambda x: x @ A.T + c, lambda x: A, name)


def _window(T: float):
    return (-float(T), float(T))


def periodic_member(inc: Inclusion, rule: EventRule, x0, branch: Branch, window, name: str,
                    tol: Tolerances = DEFAULT_TOL) -> SolutionWindow:
    """Integrate one period from ``x0`` and repeat it over ``window``."""
    piece = one_period_from_events(inc, x0, rule, branch, tol)
    return tile_periodic(piece, window, 0.0, name)


# --- segment U ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CounterexampleU:
    inc: Inclusion
    U: Region
    U0: Region
    X: Ensemble
    X0: Ensemble
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    rule: EventRule
    rule0: EventRule
    tau1: float = 1.0
    tau2: float = 1.0

    @property
    def tau(self) -> float:
        return self.tau1 + self.tau2

    @property
    def rbar(self) -> Ensemble:
        return Ensemble(self.X.members, "rbar")

    @property
    def rhat(self) -> Ensemble:
        return Ensemble(self.X.members + self.X0.members, "rhat")


def _bounce_ensemble(inc, rule, left, right, n_phases, window, prefix, left_id) -> Ensemble:
    members = [periodic_member(inc, rule, left, Branch.BRANCH1, window, f"{prefix}_{left_id}"),
               periodic_member(inc, rule, right, Branch.BRANCH2, window, f"{prefix}_c2")]
    for k in range(1, n_phases + 1):
        a = left + (right - left) * k / (n_phases + 1)
        members.append(periodic_member(inc, rule, a, Branch.BRANCH1, window, f"{prefix}_phi_{a[0]:.4f}"))
        members.append(periodic_member(inc, rule, a, Branch.BRANCH2, window, f"{prefix}_psi_{a[0]:.4f}"))
    return Ensemble(tuple(members), prefix)


@lru_cache(maxsize=4)
def make_counterexample_U(n_phases: int = 8, T_win: float = DEFAULT_T_WIN) -> CounterexampleU:
    """Bounce solutions on ``U = [(0,0), (1,0)]`` and ``U0 = [(0.5,0), (1,0)]``.

    ``X`` holds the solutions through ``c1`` and ``c2`` plus, for
    ``n_phases`` interior points ``a``, the one leaving ``a`` rightwards and
    the one leaving it leftwards; ``X0`` is built the same way on ``U0``.
    """
    c0, c1, c2 = as_point((0.5, 0.0)), as_point((0.0, 0.0)), as_point((1.0, 0.0))
    inc = Inclusion(constant_field(Branch.BRANCH1, (1.0, 0.0), "g1"),
                    constant_field(Branch.BRANCH2, (-1.0, 0.0), "g2"), "u-segment")
    rule = EventRule.alternating(PointTarget(tuple(c2)), PointTarget(tuple(c1)))
    rule0 = EventRule.alternating(PointTarget(tuple(c2)), PointTarget(tuple(c0)))
    window = _window(T_win)
    X = _bounce_ensemble(inc, rule, c1, c2, n_phases, window, "x", "c1")
    X0 = _bounce_ensemble(inc, rule0, c0, c2, n_phases, window, "x0", "c0")
    U = Region.segment(c1, c2, tol=1e-9)
    U0 = Region.segment(c0, c2, tol=1e-9)
    return CounterexampleU(inc, U, U0, X, X0, c0, c1, c2, rule, rule0)


# --- lens W -------------------------------------------------------------------

LENS_OFFSET = 0.75
LENS_RADIUS = 1.25


@dataclass(frozen=True, eq=False)
class CounterexampleW:
    inc: Inclusion
    W: Region
    S: Ensemble
    c1: np.ndarray
    c2: np.ndarray
    rule: EventRule

    @property
    def arc_time(self) -> float:
        return 2.0 * math.atan2(1.0, LENS_OFFSET)

    @property
    def tau(self) -> float:
        return 2.0 * self.arc_time


def _rotation(label: Branch, cy: float, name: str) -> BranchField:
    # clockwise unit-speed rotation about (0, cy)
    return BranchField(label, lambda x: np.stack([x[..., 1] - cy, -x[..., 0]], axis=-1),
                       lambda x: np.array([[0.0, 1.0], [-1.0, 0.0]]), name)


@lru_cache(maxsize=4)
def make_counterexample_W(n_phases: int = 16, T_win: float = DEFAULT_T_WIN) -> CounterexampleW:
    """The lens: the upper arc is centred at ``(0, -0.75)``, the lower at
    ``(0, 0.75)``, both of radius 1.25 through ``c1 = (-1,0)`` and
    ``c2 = (1,0)``.  ``S`` samples ``n_phases`` equally spaced phases of the
    lens cycle."""
    c1, c2 = as_point((-1.0, 0.0)), as_point((1.0, 0.0))
    inc = Inclusion(_rotation(Branch.BRANCH1, -LENS_OFFSET, "h1"),
                    _rotation(Branch.BRANCH2, LENS_OFFSET, "h2"), "lens-w")
    rule = EventRule.alternating(PointTarget(tuple(c2)), PointTarget(tuple(c1)))
    theta = math.atan2(LENS_OFFSET, 1.0)
    upper = Arc((0.0, -LENS_OFFSET), LENS_RADIUS, math.pi - theta, theta, clockwise=True)
    lower = Arc((0.0, LENS_OFFSET), LENS_RADIUS, -theta, -(math.pi - theta), clockwise=True)
    # tolerance covers the chord error of interpolated samples on the arcs
    W = Region(RegionKind.ARC_CHAIN, arcs=(upper, lower), tol=DEFAULT_TOL.event_tol)
    piece = one_period_from_events(inc, c1, rule, Branch.BRANCH1)
    tau = piece.hi - piece.lo
    members = tuple(tile_periodic(piece, _window(T_win), k * tau / n_phases, f"s_{k:02d}")
                    for k in range(n_phases))
    return CounterexampleW(inc, W, Ensemble(members, "stilde"), c1, c2, rule)


# --- hyperbolic-point instances ------------------------------------------------

SPIRAL_MATRIX = ((-0.1, -1.0), (1.0, -0.1))


@dataclass(frozen=True, eq=False)
class Thm24Instance:
    kind: str
    inc: Inclusion
    a_star: np.ndarray
    a: np.ndarray
    K: Region

    def construction(self, tol: Tolerances = DEFAULT_TOL) -> FixedPointConstruction:
        return _construction(self.kind, tol)

    def generator(self, tol: Tolerances = DEFAULT_TOL, switch_set=None) -> FlowGenerator:
        c = self.construction(tol)
        return FlowGenerator(self.inc, c.loop, c.V, switch_set=switch_set, name=f"flow:{self.kind}")


def _disk(radius: float, n: int = 256) -> Region:
    ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return Region(RegionKind.POLYGON, np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


@lru_cache(maxsize=4)
def make_thm24_instance(kind: str = "spiral") -> Thm24Instance:
    """``spiral``: first branch ``A x`` with ``A = [[-0.1, -1], [1, -0.1]]``,
    base point ``(1, 0)``; ``axis``: first branch ``-x``, base point
    ``(2, 0)``.  The second branch is the constant jet ``(1, 0)`` and ``K``
    the disc of radius 3."""
    jet = constant_field(Branch.BRANCH2, (1.0, 0.0), "jet")
    if kind == "spiral":
        f1 = affine_field(Branch.BRANCH1, SPIRAL_MATRIX, name="spiral-sink")
        a = (1.0, 0.0)
    elif kind == "axis":
        f1 = affine_field(Branch.BRANCH1, ((-1.0, 0.0), (0.0, -1.0)), name="node-sink")
        a = (2.0, 0.0)
    else:
        raise ParameterError(f"unknown instance kind {kind!r}")
    return Thm24Instance(kind, Inclusion(f1, jet, f"thm24-{kind}"), as_point((0.0, 0.0)), as_point(a), _disk(3.0))


@lru_cache(maxsize=8)
def _construction(kind: str, tol: Tolerances) -> FixedPointConstruction:
    inst = make_thm24_instance(kind)
    return construct_V_from_fixed_point(inst.inc, inst.a_star, inst.a, tol, inst.K)


def detour_loop(inst: Thm24Instance, quarter: float = 0.5 * math.pi, jet: float = 0.25,
                tol: Tolerances = DEFAULT_TOL) -> SolutionWindow:
    """A second loop through the base point: a quarter turn of the first
    branch, a short jet, the first branch back to the section through the
    base point and the jet home."""
    f1, f2 = inst.inc.field(Branch.BRANCH1), inst.inc.field(Branch.BRANCH2)
    a = inst.a
    u = (a - inst.a_star) / np.linalg.norm(a - inst.a_star)
    v = f1(a)
    section = Section(tuple(a), tuple(v - np.dot(v, u) * u))
    segs = [flow_segment(f1, a, 0.0, quarter, tol)]
    segs.append(flow_segment(f2, segs[-1].end, segs[-1].t_end, segs[-1].t_end + jet, tol))
    s, xs, hit = march(f1, segs[-1].end, 50.0, tol, event=section)
    if not hit:
        raise ParameterError("detour does not return to the section")
    segs.append(Segment(Branch.BRANCH1, segs[-1].t_end + s, xs))
    s, xs, hit = march(f2, xs[-1], 50.0, tol, event=PointTarget(tuple(a)))
    if not hit:
        raise ParameterError("detour does not return to the base point")
    segs.append(Segment(Branch.BRANCH2, segs[-1].t_end + s, xs))
    return SolutionWindow(tuple(segs), (0.0, segs[-1].t_end), "schedule", "detour")


@lru_cache(maxsize=8)
def itinerary_ensemble(depth: int, T_win: float = DEFAULT_T_WIN, kind: str = "spiral") -> Ensemble:
    """All ``2**depth`` binary itineraries: starting at t = 0 from the base
    point, symbol 1 runs the reference loop and symbol 0 the detour loop;
    before t = 0 and after the last symbol the reference loop repeats."""
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    inst = make_thm24_instance(kind)
    loop = inst.construction().loop
    loops = {"1": loop, "0": detour_loop(inst)}
    members = []
    for word_i in range(2 ** depth):
        word = format(word_i, f"0{depth}b")
        parts = [tile_periodic(loop, (-T_win, 0.0))]
        t = 0.0
        for sym in word:
            piece = loops[sym]
            parts.append(retime(piece, t - piece.lo))
            t += piece.hi - piece.lo
        if t >= T_win:
            raise ParameterError("itinerary longer than the window")
        parts.append(tile_periodic(loop, (t, T_win), phase=-t))
        members.append(splice(parts, provenance="concatenation", name=f"w_{word}"))
    return Ensemble(tuple(members), f"itineraries-n{depth}")


# --- IS-LM / QY-ML --------------------------------------------------------------

@dataclass(frozen=True)
class EconParams:
    """Adjustment speeds and linear behavioural coefficients.

    ``I = i0 - i_R R + i_Y Y``, ``S = s0 + s_Y Y``, ``L = l0 + l_Y Y - l_R R``,
    ``M = m0``, ``Q = q0 + q_Y Y - q_R R``.  ``trough_income`` and
    ``peak_income`` set the switching sections of the default event rule.
    """

    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    beta2: float = 0.1
    i0: float = 20.0
    i_R: float = 2.0
    i_Y: float = 0.1
    s0: float = -10.0
    s_Y: float = 0.3
    l0: float = 10.0
    l_Y: float = 0.2
    l_R: float = 4.0
    m0: float = 25.0
    q0: float = 80.0
    q_Y: float = 0.5
    q_R: float = 2.0
    trough_income: float = 130.0
    peak_income: float = 145.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.trough_income < self.peak_income:
            raise ParameterError("trough income must lie below peak income")

    @classmethod
    def from_json(cls, data) -> "EconParams":
        if not isinstance(data, dict):
            with open(data) as fh:
                data = json.load(fh)
        flat = {}
        for k, v in data.items():
            if isinstance(v, dict):
                flat.update(v)
            elif k not in ("version", "description"):
                flat[k] = v
        known = set(cls.__dataclass_fields__)
        unknown = set(flat) - known
        if unknown:
            raise ParameterError(f"unknown parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in flat.items()})

    @classmethod
    def default(cls) -> "EconParams":
        text = resources.files("diffincl").joinpath("data/islm_default.json").read_text()
        return cls.from_json(json.loads(text))

    def to_json(self) -> dict:
        return asdict(self)

    def recession_system(self):
        """``(A, c)`` with branch-1 velocity ``A @ (Y, R) + c``."""
        p = self
        A = np.array([[p.alpha1 * (p.i_Y - p.s_Y), -p.alpha1 * p.i_R],
                      [p.beta1 * p.l_Y, -p.beta1 * p.l_R]])
        c = np.array([p.alpha1 * (p.i0 - p.s0), p.beta1 * (p.l0 - p.m0)])
        return A, c

    def expansion_system(self):
        p = self
        A = np.array([[p.alpha2 * (p.q_Y - 1.0), -p.alpha2 * p.q_R],
                      [-p.beta2 * p.l_Y, p.beta2 * p.l_R]])
        c = np.array([p.alpha2 * p.q0, p.beta2 * (p.m0 - p.l0)])
        return A, c


def make_islm_qyml(params: Optional[EconParams] = None) -> Inclusion:
    """Branch 1 (recession): ``(a1 (I - S), b1 (L - M))``; branch 2
    (expansion): ``(a2 (Q - Y), b2 (M - L))``."""
    params = params or EconParams.default()
    A1, c1 = params.recession_system()
    A2, c2 = params.expansion_system()
    return Inclusion(affine_field(Branch.BRANCH1, A1, c1, "IS-LM"),
                     affine_field(Branch.BRANCH2, A2, c2, "QY-ML"), "islm-qyml")


def islm_equilibria(params: Optional[EconParams] = None):
    """Equilibria ``(Y, R)`` of the recession and the expansion branch."""
    params = params or EconParams.default()
    out = []
    for A, c in (params.recession_system(), params.expansion_system()):
        out.append(np.linalg.solve(A, -c))
    return tuple(out)


def islm_event_rule(params: Optional[EconParams] = None) -> EventRule:
    """Recession ends when income falls through the trough level, expansion
    when it rises through the peak level."""
    params = params or EconParams.default()
    trough = Section((params.trough_income, 0.0), (-1.0, 0.0))
    peak = Section((params.peak_income, 0.0), (1.0, 0.0))
    return EventRule.alternating(trough, peak)


@dataclass
class CyclePhaseReport:
    events: list
    durations: list
    empty: bool = False

    @property
    def kinds(self) -> list:
        return [e["kind"] for e in self.events]

    @property
    def alternating(self) -> bool:
        k = self.kinds
        return all(a != b for a, b in zip(k, k[1:]))

    def to_json(self) -> dict:
        return {"events": self.events, "durations": self.durations, "empty": self.empty,
                "alternating": self.alternating}


def detect_cycle_phases(sol: SolutionWindow) -> CyclePhaseReport:
    """Label branch-1 to branch-2 switches as troughs and branch-2 to
    branch-1 switches as peaks; the time between a trough and the next peak
    is an expansion, between a peak and the next trough a recession."""
    events = []
    for seg, nxt in zip(sol.segments, sol.segments[1:]):
        if seg.branch == nxt.branch:
            continue
        kind = "trough" if seg.branch == Branch.BRANCH1 else "peak"
        events.append({"t": seg.t_end, "point": [float(seg.end[0]), float(seg.end[1])], "kind": kind})
    durations = []
    for e0, e1 in zip(events, events[1:]):
        phase = "expansion" if e0["kind"] == "trough" else "recession"
        durations.append({"phase": phase, "start": e0["t"], "end": e1["t"], "length": e1["t"] - e0["t"]})
    return CyclePhaseReport(events, durations, empty=not events)


# --- registry -------------------------------------------------------------------

@dataclass
class ModelSpec:
    name: str
    inc: Inclusion
    region: Optional[Region]
    x0: np.ndarray
    initial_branch: Branch
    simulate: Callable
    description: str = ""
    extra: dict = field(default_factory=dict)


def _event_simulator(inc, rule):
    def run(x0, initial_branch, window, tol):
        return build_from_events(inc, x0, rule, window, tol, initial_branch)
    return run


def get_model(name: str, params: Optional[EconParams] = None) -> ModelSpec:
    if name == "u-segment":
        m = make_counterexample_U()
        return ModelSpec(name, m.inc, m.U, m.c1, Branch.BRANCH1, _event_simulator(m.inc, m.rule),
                         "two opposite unit fields bouncing on the unit segment")
    if name == "lens-w":
        m = make_counterexample_W()
        return ModelSpec(name, m.inc, m.W, m.c1, Branch.BRANCH1, _event_simulator(m.inc, m.rule),
                         "two clockwise rotations meeting at the lens corners")
    if name in ("thm24-spiral", "thm24-axis"):
        inst = make_thm24_instance(name.split("-")[1])

        def run(x0, initial_branch, window, tol, inst=inst):
            c = construct_V_from_fixed_point(inst.inc, inst.a_star, inst.a, tol, inst.K)
            if np.linalg.norm(as_point(x0) - inst.a) > tol.match_tol:
                raise ParameterError("this model simulates the reference loop; x0 must be its base point")
            return tile_periodic(c.loop, window, 0.0, "P")
        return ModelSpec(name, inst.inc, inst.construction().V, inst.a, Branch.BRANCH1, run,
                         "hyperbolic sink with a constant jet; the reference loop through the base point")
    if name == "islm-qyml":
        params = params or EconParams.default()
        inc = make_islm_qyml(params)
        return ModelSpec(name, inc, None, as_point((140.0, 3.0)), Branch.BRANCH1,
                         _forward_simulator(inc, islm_event_rule(params)),
                         "recession (IS-LM) / expansion (QY-ML) business cycle",
                         {"params": params.to_json()})
    raise KeyError(name)


def _forward_simulator(inc, rule):
    # backward histories of a dissipative model leave every bounded set, so
    # the run starts at the left window end instead of at t = 0
    def run(x0, initial_branch, window, tol):
        lo, hi = float(window[0]), float(window[1])
        sol = build_from_events(inc, x0, rule, (0.0, hi - lo), tol, initial_branch)
        return retime(sol, lo)
    return run


MODEL_NAMES = ("u-segment", "lens-w", "thm24-spiral", "thm24-axis", "islm-qyml")
ENSEMBLE_NAMES = ("x", "x0", "rbar", "rhat", "stilde", "itineraries-n2", "itineraries-n3", "itineraries-n4")


def get_ensemble(name: str) -> Ensemble:
    if name in ("x", "rbar"):
        return make_counterexample_U().rbar if name == "rbar" else make_counterexample_U().X
    if name == "x0":
        return make_counterexample_U().X0
    if name == "rhat":
        return make_counterexample_U().rhat
    if name == "stilde":
        return make_counterexample_W().S
    if name.startswith("itineraries-n"):
        try:
            depth = int(name[len("itineraries-n"):])
        except ValueError:
            raise KeyError(name) from None
        return itinerary_ensemble(depth)
    raise KeyError(name)
