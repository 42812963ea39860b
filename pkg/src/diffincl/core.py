"""Domain types shared by every module: points, branch fields, inclusions,
regions and numerical tolerances.

Points are plain ``float64`` arrays of shape ``(2,)``; :func:`as_point`
validates and converts anything array-like.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import shapely
from scipy import ndimage

from .errors import GeometryError, ParameterError

TWO_PI = 2.0 * math.pi


def as_point(p) -> np.ndarray:
    """Return ``p`` as a finite float array of shape (2,)."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"a point needs exactly two coordinates, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point coordinates must be finite, got {arr}")
    return arr


def as_points(ps) -> np.ndarray:
    arr = np.asarray(ps, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs used throughout.

    integ_step is the fixed RK4 step (time), event_tol the spatial accuracy of
    event location, match_tol the spatial tolerance for matching states and
    time_grid the default step of the metric's time grid.
    """

    integ_step: float = 1e-3
    event_tol: float = 1e-6
    match_tol: float = 1e-5
    time_grid: float = 1e-2

    def __post_init__(self):
        for name in ("integ_step", "event_tol", "match_tol", "time_grid"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"tolerance {name} must be positive, got {value}")


DEFAULT_TOL = Tolerances()


class Branch(enum.IntEnum):
    BRANCH1 = 1
    BRANCH2 = 2

    @property
    def other(self) -> "Branch":
        return Branch.BRANCH2 if self is Branch.BRANCH1 else Branch.BRANCH1


@dataclass(frozen=True, eq=False)
class BranchField:
    """One single-valued branch ``x' = f(x)`` of the inclusion."""

    label: Branch
    func: Callable[[np.ndarray], Sequence[float]]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        if not isinstance(x, np.ndarray):
            x = np.asarray(x, dtype=float)
        return np.asarray(self.func(x), dtype=float)

    def negated(self) -> "BranchField":
        """The time-reversed field ``-f``."""
        jac = None
        if self.jacobian is not None:
            jac = lambda x, j=self.jacobian: -np.asarray(j(x), dtype=float)
        return BranchField(self.label, lambda x, f=self.func: -np.asarray(f(x), dtype=float),
                           jac, f"-{self.name}")

    def jacobian_error(self, points, h: float = 1e-6) -> float:
        """Largest deviation between the analytic Jacobian and central
        differences of the field over ``points``."""
        if self.jacobian is None:
            raise ParameterError(f"field {self.name!r} has no analytic jacobian")
        worst = 0.0
        for p in as_points(points):
            fd = np.empty((2, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = h
                fd[:, k] = (self(p + e) - self(p - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - np.asarray(self.jacobian(p))))))
        return worst


@dataclass(frozen=True, eq=False)
class Inclusion:
    """The two-branch inclusion ``x' in {f1(x), f2(x)}``."""

    branch1: BranchField
    branch2: BranchField
    name: str = ""
    domain: Optional["Region"] = None

    def __post_init__(self):
        if self.branch1.label == self.branch2.label:
            raise ParameterError("inclusion branches must carry distinct labels")

    def field(self, label: Branch) -> BranchField:
        label = Branch(label)
        return self.branch1 if self.branch1.label == label else self.branch2

    def __iter__(self):
        return iter((self.branch1, self.branch2))


@dataclass(frozen=True)
class Arc:
    """A circular arc traced from ``from_angle`` through ``sweep`` radians."""

    center: tuple
    radius: float
    from_angle: float
    to_angle: float
    clockwise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in as_point(self.center)))
        if not self.radius > 0:
            raise GeometryError(f"arc radius must be positive, got {self.radius}")

    @property
    def sweep(self) -> float:
        if self.clockwise:
            s = (self.from_angle - self.to_angle) % TWO_PI
        else:
            s = (self.to_angle - self.from_angle) % TWO_PI
        return TWO_PI if s == 0.0 else s

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    def angle_at(self, u):
        sign = -1.0 if self.clockwise else 1.0
        return self.from_angle + sign * np.asarray(u, dtype=float) * self.sweep

    def point_at(self, u) -> np.ndarray:
        """Points at fractional positions ``u`` in [0, 1] along the arc."""
        ang = self.angle_at(u)
        c = np.asarray(self.center)
        pts = np.stack([c[0] + self.radius * np.cos(ang), c[1] + self.radius * np.sin(ang)], axis=-1)
        return pts

    def sample(self, n: int) -> np.ndarray:
        return self.point_at(np.linspace(0.0, 1.0, n))

    def distance(self, points) -> np.ndarray:
        pts = as_points(points)
        c = np.asarray(self.center)
        rel = pts - c
        rho = np.hypot(rel[:, 0], rel[:, 1])
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        if self.clockwise:
            offset = (self.from_angle - phi) % TWO_PI
        else:
            offset = (phi - self.from_angle) % TWO_PI
        on_sweep = offset <= self.sweep + 1e-15
        ends = self.point_at([0.0, 1.0])
        d_end = np.min(np.linalg.norm(pts[:, None, :] - ends[None, :, :], axis=2), axis=1)
        return np.where(on_sweep, np.abs(rho - self.radius), d_end)

    def to_json(self) -> dict:
        return {"center": list(self.center), "radius": self.radius, "from_angle": self.from_angle,
                "to_angle": self.to_angle, "clockwise": self.clockwise}


class RegionKind(str, enum.Enum):
    POLYGON = "polygon"
    SEGMENT_CHAIN = "segment_chain"
    ARC_CHAIN = "arc_chain"


@dataclass(frozen=True, eq=False)
class Region:
    """A closed subset of the plane: a filled polygon, a polyline, or a
    chain of circular arcs.  ``tol`` widens containment."""

    kind: RegionKind
    vertices: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    arcs: tuple = ()
    tol: float = 1e-9
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "arcs", tuple(a if isinstance(a, Arc) else Arc(**a) for a in self.arcs))
        object.__setattr__(self, "holes", tuple(np.asarray(h, dtype=float).reshape(-1, 2) for h in self.holes))
        if not self.tol >= 0:
            raise GeometryError(f"containment tolerance must be >= 0, got {self.tol}")
        if not np.all(np.isfinite(verts)):
            raise GeometryError("region vertices must be finite")
        if self.kind is RegionKind.POLYGON:
            if len(verts) < 3:
                raise GeometryError("a polygon needs at least three vertices")
            if not self._geom.is_valid or self._geom.area <= 0:
                raise GeometryError("polygon is self-intersecting or has zero area: "
                                    + shapely.is_valid_reason(self._geom))
        elif self.kind is RegionKind.SEGMENT_CHAIN:
            if len(verts) < 1:
                raise GeometryError("a segment chain needs at least one vertex")
        elif not self.arcs:
            raise GeometryError("an arc chain needs at least one arc")

    @classmethod
    def segment(cls, a, b, tol: float = 1e-9) -> "Region":
        return cls(RegionKind.SEGMENT_CHAIN, np.array([as_point(a), as_point(b)]), tol=tol)

    @cached_property
    def _geom(self):
        if self.kind is RegionKind.POLYGON:
            return shapely.Polygon(self.vertices, holes=[h for h in self.holes])
        if self.kind is RegionKind.SEGMENT_CHAIN:
            if len(self.vertices) == 1:
                return shapely.Point(self.vertices[0])
            return shapely.LineString(self.vertices)
        return None

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the region (0 inside)."""
        pts = as_points(points)
        if self.kind is RegionKind.ARC_CHAIN:
            return np.min(np.stack([arc.distance(pts) for arc in self.arcs]), axis=0)
        return np.asarray(shapely.distance(self._geom, shapely.points(pts)), dtype=float)

    def within(self, points, r: float) -> np.ndarray:
        """``distance(points) <= r`` without computing the distances."""
        pts = as_points(points)
        if self.kind is RegionKind.ARC_CHAIN:
            return self.distance(pts) <= r
        shapely.prepare(self._geom)
        return np.asarray(shapely.dwithin(self._geom, shapely.points(pts), r), dtype=bool)

    def contains(self, p) -> bool:
        return bool(self.within(as_point(p), self.tol)[0])

    def contains_all(self, points) -> np.ndarray:
        return self.within(points, self.tol)

    def interior_radius(self, points) -> np.ndarray:
        """Radius of the largest open disc around each point that stays inside
        the region; zero for curve-only regions and for outside points."""
        pts = as_points(points)
        if self.kind is not RegionKind.POLYGON:
            return np.zeros(len(pts))
        geo = shapely.points(pts)
        inside = shapely.contains(self._geom, geo)
        d = np.asarray(shapely.distance(self._geom.boundary, geo), dtype=float)
        return np.where(inside, d, 0.0)

    @cached_property
    def outline(self) -> np.ndarray:
        """A dense vertex list tracing the geometry (arcs are sampled)."""
        if self.kind is RegionKind.ARC_CHAIN:
            parts = [a.sample(max(16, int(a.length / 1e-3))) for a in self.arcs]
            return np.concatenate(parts)
        if self.kind is RegionKind.POLYGON:
            return np.concatenate([self.vertices] + list(self.holes))
        return self.vertices

    @cached_property
    def bounds(self) -> tuple:
        pts = self.outline
        return (float(pts[:, 0].min()), float(pts[:, 1].min()),
                float(pts[:, 0].max()), float(pts[:, 1].max()))

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def has_interior(self) -> bool:
        return self.kind is RegionKind.POLYGON

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "vertices": self.vertices.tolist(),
               "arcs": [a.to_json() for a in self.arcs], "tol": self.tol}
        if self.holes:
            out["holes"] = [h.tolist() for h in self.holes]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Region":
        return cls(data["kind"], np.asarray(data.get("vertices", []), dtype=float).reshape(-1, 2),
                   tuple(Arc(**a) for a in data.get("arcs", [])), float(data.get("tol", 1e-9)),
                   tuple(data.get("holes", ())))

    def transformed(self, rotation: float = 0.0, offset=(0.0, 0.0)) -> "Region":
        """Image of the region under a rotation about the origin followed by a
        translation."""
        c, s = math.cos(rotation), math.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        off = as_point(offset)
        move = lambda v: v @ rot.T + off if len(v) else v
        arcs = tuple(Arc(tuple(rot @ np.asarray(a.center) + off), a.radius, a.from_angle + rotation,
                         a.to_angle + rotation, a.clockwise) for a in self.arcs)
        return Region(self.kind, move(self.vertices), arcs, self.tol, tuple(move(h) for h in self.holes))


def contains(region: Region, p) -> bool:
    """True iff ``p`` lies within ``region.tol`` of the region."""
    return region.contains(p)


def complement_unbounded(region: Region, cells: int = 400) -> bool:
    """Decide whether the complement of ``region`` is a single unbounded set.

    The region is rasterized on a square box four times its diameter; every
    cell the region touches is blocked and the free cells are labelled with
    4-connectivity.  The complement is connected iff exactly one free
    component exists (it necessarily touches the box border).
    """
    if region.kind is RegionKind.SEGMENT_CHAIN and len(region.vertices) == 0:
        raise GeometryError("empty region")
    x0, y0, x1, y1 = region.bounds
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    side = 4.0 * max(region.diameter, 1e-6)
    h = side / cells
    centers = cx - side / 2 + h * (np.arange(cells) + 0.5)
    gx, gy = np.meshgrid(centers, cy - side / 2 + h * (np.arange(cells) + 0.5), indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    # a cell is touched iff its centre is within half a diagonal of the set
    blocked = region.within(pts, region.tol + h * math.sqrt(0.5))
    free = ~blocked.reshape(cells, cells)
    _, n_components = ndimage.label(free)
    return n_components == 1
