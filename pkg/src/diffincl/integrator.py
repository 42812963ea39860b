"""Fixed-step RK4 integration of a single branch and event location."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import DEFAULT_TOL, Branch, BranchField, Tolerances, as_point
from .errors import BlowUpError, NoEventError, ParameterError

BLOWUP_RADIUS = 1e6


@dataclass(frozen=True, eq=False)
class Segment:
    """Samples of one branch on ``[t_start, t_end]``; times strictly increase."""

    branch: Branch
    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float).reshape(-1, 2)
        if len(t) != len(x) or len(t) < 2:
            raise ValueError("a segment needs at least two samples with matching times")
        if np.any(np.diff(t) <= 0):
            raise ValueError("segment times must be strictly increasing")
        object.__setattr__(self, "branch", Branch(self.branch))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def start(self) -> np.ndarray:
        return self.x[0]

    @property
    def end(self) -> np.ndarray:
        return self.x[-1]

    def at(self, t) -> np.ndarray:
        tt = np.asarray(t, dtype=float)
        return np.stack([np.interp(tt, self.t, self.x[:, 0]), np.interp(tt, self.t, self.x[:, 1])], axis=-1)

    def shifted(self, dt: float) -> "Segment":
        return Segment(self.branch, self.t + dt, self.x)

    def clipped(self, lo: float, hi: float) -> Optional["Segment"]:
        """Restriction to ``[lo, hi]`` with interpolated end samples, or None
        if the overlap is shorter than a rounding error."""
        lo, hi = max(lo, self.t_start), min(hi, self.t_end)
        if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
            return None
        if lo == self.t_start and hi == self.t_end:
            return self
        inner = (self.t > lo) & (self.t < hi)
        t = np.concatenate([[lo], self.t[inner], [hi]])
        x = np.concatenate([self.at([lo]), self.x[inner], self.at([hi])])
        keep = np.concatenate([[True], np.diff(t) > 1e-13])
        if not keep[-1]:
            keep[-1], keep[-2] = True, len(t) == 2
        return Segment(self.branch, t[keep], x[keep])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x1", "x2", "branch"])
            for t, (a, b) in zip(self.t, self.x):
                w.writerow([repr(float(t)), repr(float(a)), repr(float(b)), int(self.branch)])

    @classmethod
    def read_csv(cls, path) -> "Segment":
        rows = list(csv.DictReader(open(path, newline="")))
        t = np.array([float(r["t"]) for r in rows])
        x = np.array([[float(r["x1"]), float(r["x2"])] for r in rows])
        return cls(Branch(int(rows[0]["branch"])), t, x)


@dataclass(frozen=True)
class PointTarget:
    """Arrival at a point: closest approach within ``event_tol``."""

    point: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(as_point(self.point)))

    def indicator(self, x, v) -> float:
        # derivative of half the squared distance; rises through zero at closest approach
        p = self.point
        return (x[0] - p[0]) * v[0] + (x[1] - p[1]) * v[1]

    def accepts(self, x, tol: Tolerances) -> bool:
        return math.hypot(x[0] - self.point[0], x[1] - self.point[1]) <= tol.event_tol


@dataclass(frozen=True)
class Section:
    """Signed crossing of the line through ``point`` with normal ``normal``.

    Fires when ``normal . (x - point)`` goes from negative to non-negative.
    """

    point: tuple
    normal: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(as_point(self.point)))
        n = as_point(self.normal)
        if not np.any(n):
            raise ParameterError("section normal must be nonzero")
        object.__setattr__(self, "normal", tuple(n / np.linalg.norm(n)))

    def indicator(self, x, v) -> float:
        return (x[0] - self.point[0]) * self.normal[0] + (x[1] - self.point[1]) * self.normal[1]

    def accepts(self, x, tol: Tolerances) -> bool:
        return True


Event = Union[PointTarget, Section]


def _rk4_step(f, x, h, k1=None):
    if k1 is None:
        k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _guard(x, t):
    # the comparison is False for nan as well
    if not abs(x[0]) + abs(x[1]) <= BLOWUP_RADIUS:
        raise BlowUpError(f"state left the guard ball at t={t:.6g}", t=t, state=x)


def march(field: BranchField, x0, duration: float, tol: Tolerances = DEFAULT_TOL,
          event: Optional[Event] = None, backward: bool = False, max_misses: Optional[int] = None):
    """Integrate ``field`` from ``x0`` for ``duration`` time units.

    Returns ``(s, xs, hit)`` where ``s`` are elapsed times (from 0), ``xs`` the
    states and ``hit`` whether ``event`` fired; on a hit the last sample is
    the refined event state.  With ``backward`` the flow of ``-field`` is
    followed, i.e. ``xs[k]`` is the state ``s[k]`` time units *earlier*.
    A crossing rejected by the event's acceptance test is a miss; after
    ``max_misses`` of them integration stops without a hit.
    """
    f = field.negated() if backward else field
    h = tol.integ_step
    x = as_point(x0).copy()
    _guard(x, 0.0)
    n_full = int(math.floor(duration / h + 1e-9))
    n_steps = n_full + (1 if duration - n_full * h > 1e-12 else 0)
    cap = min(n_steps, 1024) + 1
    s_out = np.empty(cap)
    x_out = np.empty((cap, 2))
    s_out[0], x_out[0] = 0.0, x
    s = 0.0
    fx = f(x)
    g_prev = event.indicator(x, fx) if event is not None else None
    misses = 0
    for k in range(1, n_steps + 1):
        if k >= cap:
            cap = min(2 * cap, n_steps + 1)
            s_out = np.resize(s_out, cap)
            x_out = np.resize(x_out, (cap, 2))
        s_new = k * h if k <= n_full else duration
        hk = s_new - s if k > n_full else h
        x_new = _rk4_step(f, x, hk, fx)
        _guard(x_new, s_new)
        fx = f(x_new)
        if event is not None:
            g_new = event.indicator(x_new, fx)
            if g_prev < 0.0 <= g_new:
                theta = _bisect(f, x, hk, event, g_prev)
                x_hit = x_new if theta >= 1.0 else _rk4_step(f, x, theta * hk)
                if event.accepts(x_hit, tol):
                    s_out[k], x_out[k] = s + theta * hk, x_hit
                    return s_out[:k + 1], x_out[:k + 1], True
                misses += 1
                if max_misses is not None and misses >= max_misses:
                    s_out[k], x_out[k] = s_new, x_new
                    return s_out[:k + 1], x_out[:k + 1], False
            g_prev = g_new
        s_out[k], x_out[k] = s_new, x_new
        x, s = x_new, s_new
    return s_out[:n_steps + 1], x_out[:n_steps + 1], False


def _bisect(f, x, h, event, g_lo):
    lo, hi = 0.0, 1.0
    for _ in range(80):
        if (hi - lo) * h < 1e-14:
            break
        mid = 0.5 * (lo + hi)
        xm = _rk4_step(f, x, mid * h)
        if event.indicator(xm, f(xm)) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def flow_segment(field: BranchField, x0, t_from: float, t_to: float,
                 tol: Tolerances = DEFAULT_TOL) -> Segment:
    """Segment of ``field`` through state ``x0`` at time ``t_from``, covering
    the interval between ``t_from`` and ``t_to`` (either order)."""
    if t_to == t_from:
        raise ParameterError("zero-length integration interval")
    backward = t_to < t_from
    s, xs, _ = march(field, x0, abs(t_to - t_from), tol, backward=backward)
    if backward:
        return Segment(field.label, (t_from - s)[::-1], xs[::-1])
    return Segment(field.label, t_from + s, xs)


def integrate_branch(field: BranchField, x0, t0: float, t1: float,
                     tol: Tolerances = DEFAULT_TOL) -> Segment:
    """Integrate ``x' = field(x)`` from ``x(t0) = x0`` to ``t1``.

    Classical RK4 with fixed step ``tol.integ_step`` and a final partial step
    that lands exactly on ``t1``.  Raises :class:`BlowUpError` if the state
    becomes non-finite or leaves the ball of radius 1e6.
    """
    if not t0 < t1:
        raise ParameterError(f"need t0 < t1, got [{t0}, {t1}]")
    return flow_segment(field, x0, t0, t1, tol)


def hit_event(field: BranchField, x0, event: Event, t_max: float,
              tol: Tolerances = DEFAULT_TOL):
    """Earliest ``t`` in ``(0, t_max]`` at which the flow from ``x0`` reaches
    ``event``; returns ``(t_hit, p_hit)``."""
    if not t_max > 0:
        raise ParameterError("t_max must be positive")
    s, xs, hit = march(field, x0, t_max, tol, event=event)
    if not hit:
        raise NoEventError(f"no event before t_max={t_max}")
    return float(s[-1]), xs[-1].copy()
