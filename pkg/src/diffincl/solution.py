"""Switching solutions on finite time windows.

A :class:`SolutionWindow` is an ordered chain of one-branch
:class:`~diffincl.integrator.Segment` objects that abut in time and state and
cover a window ``[lo, hi]`` containing 0.  Branch labels are left-continuous:
at a join time the label is that of the segment ending there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .core import DEFAULT_TOL, Branch, Inclusion, Tolerances, as_point
from .errors import NoEventError, ParameterError, WindowError
from .integrator import Event, PointTarget, Section, Segment, flow_segment, march

DEFAULT_T_WIN = 40.0
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Switch times on a window; ``initial_branch`` is active right after t=0
    and the label alternates at every switch time."""

    switch_times: tuple
    initial_branch: Branch = Branch.BRANCH1
    window: tuple = (-DEFAULT_T_WIN, DEFAULT_T_WIN)

    def __post_init__(self):
        times = tuple(float(t) for t in self.switch_times)
        lo, hi = (float(w) for w in self.window)
        if not lo < 0 < hi:
            raise ParameterError("schedule window must contain 0 in its interior")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("switch times must be strictly increasing")
        if times and not (lo < times[0] and times[-1] < hi):
            raise ParameterError("switch times must lie inside the window")
        object.__setattr__(self, "switch_times", times)
        object.__setattr__(self, "window", (lo, hi))
        object.__setattr__(self, "initial_branch", Branch(self.initial_branch))


@dataclass(frozen=True)
class EventRule:
    """For each branch: the event that ends it (None = never) and the branch
    that follows."""

    rules: Dict[Branch, Tuple[Optional[Event], Branch]]

    def __post_init__(self):
        rules = {Branch(k): (ev, Branch(nxt)) for k, (ev, nxt) in self.rules.items()}
        for b in Branch:
            if b not in rules:
                raise ParameterError(f"event rule is missing an entry for {b.name}")
        object.__setattr__(self, "rules", rules)

    @classmethod
    def alternating(cls, end_of_branch1: Optional[Event], end_of_branch2: Optional[Event]) -> "EventRule":
        return cls({Branch.BRANCH1: (end_of_branch1, Branch.BRANCH2),
                    Branch.BRANCH2: (end_of_branch2, Branch.BRANCH1)})

    def __getitem__(self, branch) -> Tuple[Optional[Event], Branch]:
        return self.rules[Branch(branch)]

    def predecessor(self, branch: Branch) -> Branch:
        """The branch whose rule hands over to ``branch``."""
        branch = Branch(branch)
        for cand in (branch.other, branch):
            if self.rules[cand][1] == branch:
                return cand
        raise ParameterError(f"no rule switches into {branch.name}")


@dataclass(frozen=True, eq=False)
class SolutionWindow:
    segments: tuple
    window: tuple
    provenance: str = "schedule"
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("a solution needs at least one segment")
        lo, hi = (float(w) for w in self.window)
        if not lo < hi:
            raise ValueError("empty window")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t_end - b.t_start) > _TIME_EPS * max(1.0, abs(a.t_end)):
                raise ValueError(f"segments do not abut in time at t={a.t_end}")
        if segs[0].t_start > lo + 1e-7 or segs[-1].t_end < hi - 1e-7:
            raise ValueError("segments do not cover the window")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "window", (lo, hi))

    @property
    def lo(self) -> float:
        return self.window[0]

    @property
    def hi(self) -> float:
        return self.window[1]

    @property
    def half_width(self) -> float:
        """Largest T with [-T, T] inside the window."""
        return min(-self.lo, self.hi)

    @cached_property
    def times(self) -> np.ndarray:
        parts = [self.segments[0].t] + [s.t[1:] for s in self.segments[1:]]
        return np.concatenate(parts)

    @cached_property
    def states(self) -> np.ndarray:
        parts = [self.segments[0].x] + [s.x[1:] for s in self.segments[1:]]
        return np.concatenate(parts)

    @cached_property
    def joins(self) -> list:
        """``(time, branch_before, branch_after, gap)`` for every segment join."""
        return [(a.t_end, a.branch, b.branch, float(np.linalg.norm(a.end - b.start)))
                for a, b in zip(self.segments, self.segments[1:])]

    @cached_property
    def switch_times(self) -> np.ndarray:
        return np.array([t for t, b0, b1, _ in self.joins if b0 != b1])

    @cached_property
    def switch_points(self) -> np.ndarray:
        pts = [a.end for a, b in zip(self.segments, self.segments[1:]) if a.branch != b.branch]
        return np.array(pts).reshape(-1, 2)

    def __call__(self, t) -> np.ndarray:
        tt = np.asarray(t, dtype=float)
        if np.any(tt < self.lo - 1e-9) or np.any(tt > self.hi + 1e-9):
            raise WindowError(f"time outside solution window {self.window}")
        ts, xs = self.times, self.states
        return np.stack([np.interp(tt, ts, xs[:, 0]), np.interp(tt, ts, xs[:, 1])], axis=-1)

    def branch_at(self, t: float) -> Branch:
        for seg in self.segments:
            if t <= seg.t_end:
                return seg.branch
        return self.segments[-1].branch

    def resample(self, grid: float) -> Tuple[int, np.ndarray]:
        """States at every multiple ``j * grid`` inside the window; returns the
        first index ``j0`` and the ``(n, 2)`` state array."""
        key = ("grid", grid)
        if key not in self._cache:
            j0 = math.ceil(self.lo / grid - 1e-9)
            j1 = math.floor(self.hi / grid + 1e-9)
            tt = np.clip(np.arange(j0, j1 + 1) * grid, self.lo, self.hi)
            self._cache[key] = (j0, self(tt))
        return self._cache[key]

    def with_name(self, name: str) -> "SolutionWindow":
        return SolutionWindow(self.segments, self.window, self.provenance, name)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A finite set of solutions sharing one window."""

    members: tuple
    name: str = ""

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        w = members[0].window
        for m in members:
            if abs(m.window[0] - w[0]) > 1e-9 or abs(m.window[1] - w[1]) > 1e-9:
                raise ValueError("ensemble members must share the same window")
        object.__setattr__(self, "members", members)

    @property
    def ids(self) -> list:
        return [m.name or f"m{k}" for k, m in enumerate(self.members)]

    @property
    def window(self) -> tuple:
        return self.members[0].window

    def index(self, member_id: str) -> int:
        return self.ids.index(member_id)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.index(key)
        return self.members[key]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def union(self, other: "Ensemble", name: str = "") -> "Ensemble":
        return Ensemble(self.members + other.members, name or f"{self.name}+{other.name}")


# --- construction -----------------------------------------------------------

def build_from_schedule(inc: Inclusion, x0, sched: Schedule,
                        tol: Tolerances = DEFAULT_TOL) -> SolutionWindow:
    """Integrate the branches dictated by ``sched`` forward and backward from
    the state ``x0`` at t = 0."""
    x0 = as_point(x0)
    lo, hi = sched.window
    bounds = [lo, *sched.switch_times, hi]
    k0 = max(k for k in range(len(bounds) - 1) if bounds[k] <= 0.0)

    def branch_of(k):
        return sched.initial_branch if (k - k0) % 2 == 0 else sched.initial_branch.other

    forward, x = [], x0
    start = 0.0
    for k in range(k0, len(bounds) - 1):
        seg = flow_segment(inc.field(branch_of(k)), x, start, bounds[k + 1], tol)
        forward.append(seg)
        x, start = seg.end, bounds[k + 1]

    backward, x, end = [], x0, 0.0
    for k in range(k0, -1, -1):
        if bounds[k] < end:
            seg = flow_segment(inc.field(branch_of(k)), x, end, bounds[k], tol)
            backward.append(seg)
            x, end = seg.start, bounds[k]
    return SolutionWindow(tuple(backward[::-1] + forward), (lo, hi), "schedule")


def _reverse_event(event: Event) -> Event:
    if isinstance(event, Section):
        return Section(event.point, tuple(-np.asarray(event.normal)))
    return event


def build_from_events(inc: Inclusion, x0, rule: EventRule, window=(-DEFAULT_T_WIN, DEFAULT_T_WIN),
                      tol: Tolerances = DEFAULT_TOL, initial_branch: Branch = Branch.BRANCH1,
                      horizon: Optional[float] = None) -> SolutionWindow:
    """Follow ``rule`` forward and backward from ``x0`` (state at t = 0).
    A window starting at 0 gives a forward-only solution.

    Each segment runs until its branch's event fires; the search for an event
    extends up to ``horizon`` time units (default: the window length), past
    the window end if necessary.  An unreachable event raises
    :class:`NoEventError`; an event already satisfied at a segment start is
    a degenerate rule and raises :class:`ParameterError`.
    """
    x0 = as_point(x0)
    lo, hi = float(window[0]), float(window[1])
    if not lo <= 0 < hi:
        raise ParameterError("window must contain 0, with 0 before its right end")
    horizon = (hi - lo) if horizon is None else float(horizon)
    initial_branch = Branch(initial_branch)

    forward, x, t, cur = [], x0, 0.0, initial_branch
    while t < hi - _TIME_EPS:
        event, nxt = rule[cur]
        field_ = inc.field(cur)
        if event is None:
            forward.append(flow_segment(field_, x, t, hi, tol))
            break
        if isinstance(event, PointTarget) and event.accepts(x, tol):
            raise ParameterError(f"zero-length segment: {cur.name} starts on its own event at t={t:.6g}")
        s, xs, hit = march(field_, x, max(horizon, hi - t), tol, event=event)
        if not hit:
            raise NoEventError(f"{cur.name} event not reached within horizon {horizon} from t={t:.6g}")
        seg = Segment(cur, t + s, xs)
        if seg.t_end >= hi:
            forward.append(seg.clipped(t, hi))
            break
        forward.append(seg)
        x, t, cur = xs[-1], seg.t_end, nxt

    backward, x, t, cur = [], x0, 0.0, initial_branch
    immediate = 0
    while t > lo + _TIME_EPS:
        prev = rule.predecessor(cur)
        event = rule[prev][0]
        field_ = inc.field(cur)
        if event is None:
            backward.append(flow_segment(field_, x, t, lo, tol))
            break
        if isinstance(event, PointTarget) and event.accepts(x, tol):
            # the switch into ``cur`` happened exactly here
            immediate += 1
            if immediate > 2:
                raise ParameterError("degenerate event rule: both events fire at the same state")
            cur = prev
            continue
        immediate = 0
        s, xs, hit = march(field_, x, max(horizon, t - lo), tol, event=_reverse_event(event), backward=True)
        if not hit:
            raise NoEventError(f"{cur.name} entry event not reached backward within horizon {horizon}")
        seg = Segment(cur, (t - s)[::-1], xs[::-1])
        if seg.t_start <= lo:
            backward.append(seg.clipped(lo, t))
            break
        backward.append(seg)
        x, t, cur = xs[-1], seg.t_start, prev
    return SolutionWindow(tuple(backward[::-1] + forward), (lo, hi), "event-rule")


def one_period_from_events(inc: Inclusion, x0, rule: EventRule, initial_branch: Branch,
                           tol: Tolerances = DEFAULT_TOL, max_switches: int = 64,
                           horizon: float = 100.0) -> SolutionWindow:
    """Follow ``rule`` forward from ``x0`` until the state returns to ``x0`` on
    ``initial_branch``; the result covers exactly one period ``[0, tau]``."""
    x0 = as_point(x0)
    segs, x, t, cur = [], x0, 0.0, Branch(initial_branch)
    for _ in range(max_switches + 1):
        event, nxt = rule[cur]
        if event is None:
            raise NoEventError("a terminal rule has no period")
        field_ = inc.field(cur)
        if isinstance(event, PointTarget) and event.accepts(x, tol):
            raise ParameterError("zero-length segment in periodic construction")
        s, xs, hit = march(field_, x, horizon, tol, event=event)
        if not hit:
            raise NoEventError("event not reached while closing the period")
        if cur == initial_branch and segs:
            # the return to x0 may occur before this branch's event
            back = PointTarget(tuple(x0))
            s2, xs2, hit2 = march(field_, x, s[-1], tol, event=back)
            if hit2:
                segs.append(Segment(cur, t + s2, xs2))
                break
        segs.append(Segment(cur, t + s, xs))
        x, t, cur = xs[-1], t + s[-1], nxt
        if cur == initial_branch and np.linalg.norm(x - x0) <= tol.event_tol:
            break
    else:
        raise NoEventError("no return to the initial state within max_switches")
    return SolutionWindow(tuple(segs), (0.0, segs[-1].t_end), "event-rule")


def tile_periodic(piece: SolutionWindow, window, phase: float = 0.0, name: str = "") -> SolutionWindow:
    """Periodic extension ``x(t) = piece(piece.lo + ((t + phase) mod tau))``
    restricted to ``window``, where tau is the length of ``piece``."""
    lo, hi = float(window[0]), float(window[1])
    tau = piece.hi - piece.lo
    k_first = math.floor((lo + phase) / tau) - 1
    k_last = math.ceil((hi + phase) / tau) + 1
    segs = []
    for k in range(k_first, k_last + 1):
        offset = k * tau - phase - piece.lo
        for seg in piece.segments:
            moved = seg.shifted(offset)
            if moved.t_end <= lo or moved.t_start >= hi:
                continue
            clipped = moved.clipped(lo, hi)
            if clipped is None:
                continue
            if segs and abs(segs[-1].t_end - clipped.t_start) > 0:
                clipped = Segment(clipped.branch, np.concatenate([[segs[-1].t_end], clipped.t[1:]]), clipped.x)
            segs.append(clipped)
    return SolutionWindow(tuple(segs), (lo, hi), piece.provenance + "+periodic", name)


def restrict(sol: SolutionWindow, lo: float, hi: float) -> SolutionWindow:
    if lo < sol.lo - 1e-9 or hi > sol.hi + 1e-9 or not lo < hi:
        raise WindowError(f"[{lo}, {hi}] is not inside {sol.window}")
    segs = [c for c in (s.clipped(lo, hi) for s in sol.segments) if c is not None]
    return SolutionWindow(tuple(segs), (lo, hi), sol.provenance, sol.name)


def retime(sol: SolutionWindow, dt: float) -> SolutionWindow:
    """The same curve with every time moved by ``+dt``."""
    return SolutionWindow(tuple(s.shifted(dt) for s in sol.segments),
                          (sol.lo + dt, sol.hi + dt), sol.provenance, sol.name)


def splice(pieces: Sequence[SolutionWindow], provenance: str = "concatenation", name: str = "") -> SolutionWindow:
    """Join solutions whose windows abut end to start into one solution."""
    segs = []
    for p in pieces:
        for s in p.segments:
            if segs and s.t_start != segs[-1].t_end:
                s = Segment(s.branch, np.concatenate([[segs[-1].t_end], s.t[1:]]), s.x)
            segs.append(s)
    return SolutionWindow(tuple(segs), (pieces[0].lo, pieces[-1].hi), provenance, name)


def shift(sol: SolutionWindow, t: float) -> SolutionWindow:
    """The shifted solution ``y(s) = x(t + s)``.

    Its window is ``[lo - t, hi - t]``, so the symmetric half-width shrinks by
    ``|t|``; shifting by ``|t| >= T_win`` raises :class:`WindowError`.
    """
    if not sol.lo < t < sol.hi:
        raise WindowError(f"shift {t} exhausts window {sol.window}")
    if t == 0.0:
        return sol
    return retime(sol, -t)


# --- verification -----------------------------------------------------------

@dataclass
class InclusionReport:
    max_residual: float
    violating_times: list
    max_join_gap: float
    n_checked: int

    @property
    def ok(self) -> bool:
        return not self.violating_times


def verify_inclusion(sol: SolutionWindow, inc: Inclusion, tol: Tolerances = DEFAULT_TOL,
                     threshold: float = 1e-3) -> InclusionReport:
    """Compare finite-difference derivatives with both branch fields.

    Central differences are taken at interior samples of each segment away
    from joins (a 2*integ_step neighbourhood is skipped, the derivative being
    unconstrained at switch instants).  State jumps larger than
    ``tol.match_tol`` at joins are reported as violations too.
    """
    guard = 2.0 * tol.integ_step
    worst, bad, n = 0.0, [], 0
    for seg in sol.segments:
        t, x = seg.t, seg.x
        if len(t) < 3:
            continue
        h1 = t[1:-1] - t[:-2]
        h2 = t[2:] - t[1:-1]
        keep = (t[1:-1] - seg.t_start > guard) & (seg.t_end - t[1:-1] > guard)
        if not np.any(keep):
            continue
        h1, h2 = h1[keep, None], h2[keep, None]
        xm, xc, xp = x[:-2][keep], x[1:-1][keep], x[2:][keep]
        deriv = (h1 ** 2 * xp - h2 ** 2 * xm + (h2 ** 2 - h1 ** 2) * xc) / (h1 * h2 * (h1 + h2))
        res = np.min(np.stack([np.linalg.norm(deriv - eval_many(f, xc), axis=1) for f in inc]), axis=0)
        n += len(res)
        if len(res):
            worst = max(worst, float(res.max()))
        bad.extend(t[1:-1][keep][res > threshold].tolist())
    gaps = [g for _, _, _, g in sol.joins]
    bad.extend(tj for tj, _, _, g in sol.joins if g > tol.match_tol)
    return InclusionReport(worst, sorted(bad), max(gaps, default=0.0), n)


def eval_many(field_, points: np.ndarray) -> np.ndarray:
    """Evaluate a branch field on an ``(n, 2)`` array, vectorized when the
    field supports it."""
    try:
        out = np.asarray(field_.func(points), dtype=float)
        if out.shape == points.shape:
            return out
    except Exception:
        pass
    return np.array([field_(p) for p in points]).reshape(-1, 2)


def _period_error(ts, xs, tau):
    sel = ts <= ts[-1] - tau
    if not np.any(sel):
        return math.inf
    tt = ts[sel]
    shifted = np.stack([np.interp(tt + tau, ts, xs[:, 0]), np.interp(tt + tau, ts, xs[:, 1])], axis=-1)
    return float(np.max(np.linalg.norm(shifted - xs[sel], axis=1)))


def detect_period(sol: SolutionWindow, tol: Tolerances = DEFAULT_TOL,
                  max_period: Optional[float] = None) -> Optional[float]:
    """Smallest tau with ``sup_t |x(t + tau) - x(t)| <= match_tol`` over the
    stored samples, or None.

    Candidates come from the switch-time lattice (differences of switch times
    of the same kind) and from near-returns to the state at the window
    centre; each is checked and, when close, refined by a bounded scalar
    minimisation.  Only periods up to a quarter of the window are considered.
    """
    ts, xs = sol.times, sol.states
    if max_period is None:
        max_period = (sol.hi - sol.lo) / 4.0
    cands = []
    kinds: Dict[tuple, list] = {}
    for t, b0, b1, _ in sol.joins:
        if b0 != b1:
            kinds.setdefault((b0, b1), []).append(t)
    for times in kinds.values():
        times = np.asarray(times)
        diffs = (times[None, :] - times[:, None]).ravel()
        cands.extend(d for d in diffs if 0 < d <= max_period)
    ref_t = 0.5 * (sol.lo + sol.hi)
    ref = sol(ref_t)
    after = ts > ref_t
    dist = np.linalg.norm(xs[after] - ref, axis=1)
    if len(dist) > 2:
        interior = (dist[1:-1] <= dist[:-2]) & (dist[1:-1] <= dist[2:])
        scale = max(float(np.max(np.linalg.norm(xs - ref, axis=1))), 1e-12)
        minima = np.nonzero(interior & (dist[1:-1] < 1e-2 * scale))[0] + 1
        cands.extend(t - ref_t for t in ts[after][minima] if 0 < t - ref_t <= max_period)
    if not cands:
        return None
    cands = np.unique(np.round(np.asarray(cands), 10))
    h = tol.integ_step
    for tau in cands:
        err = _period_error(ts, xs, tau)
        if err <= tol.match_tol:
            return float(tau)
        if err <= 1e3 * tol.match_tol:
            res = minimize_scalar(lambda s: _period_error(ts, xs, s), bounds=(tau - 2 * h, tau + 2 * h),
                                  method="bounded", options={"xatol": 1e-10})
            if res.fun <= tol.match_tol:
                return float(res.x)
    return None
