import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffincl import models
from diffincl.core import (Arc, Branch, BranchField, Inclusion, Region, RegionKind, Tolerances, as_point,
                           complement_unbounded, contains)
from diffincl.errors import GeometryError, ParameterError


def disk(r, n=128, center=(0.0, 0.0)):
    a = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return np.column_stack([center[0] + r * np.cos(a), center[1] + r * np.sin(a)])


def test_segment_contains_midpoint_not_offset_point():
    seg = Region.segment((0, 0), (1, 0))
    assert contains(seg, (0.5, 0))
    assert not contains(seg, (0.5, 1))


def test_spiral_region_contains_centroid(spiral_construction):
    V = spiral_construction.V
    assert V.kind is RegionKind.POLYGON
    # shoelace centroid as independent point-in-polygon witness
    x, y = V.vertices[:, 0], V.vertices[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = cross.sum() / 2
    c = np.array([((x + np.roll(x, -1)) * cross).sum(), ((y + np.roll(y, -1)) * cross).sum()]) / (6 * area)
    assert contains(V, c)


@pytest.mark.parametrize("region", [
    Region.segment((0, 0), (1, 0)),
    Region(RegionKind.POLYGON, disk(1.0)),
    Region(RegionKind.SEGMENT_CHAIN, np.array([[0, 0], [1, 0], [1, 1], [0, 2]])),
])
def test_contains_every_vertex(region):
    assert np.all(region.contains_all(region.vertices))


def test_complement_of_segment_is_unbounded():
    assert complement_unbounded(Region.segment((0, 0), (1, 0)))


def test_annulus_has_bounded_complement_component():
    ring = Region(RegionKind.POLYGON, disk(1.0), holes=(disk(0.5)[::-1],))
    assert not complement_unbounded(ring)


def test_lens_curve_encloses_a_pocket(cex_w):
    assert not complement_unbounded(cex_w.W)


def test_open_arc_leaves_complement_connected():
    arc = Region(RegionKind.ARC_CHAIN, arcs=(Arc((0, 0), 1.0, 0.0, 1.5 * math.pi),))
    assert complement_unbounded(arc)


@settings(max_examples=20, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_complement_unbounded_invariant_under_rigid_motion(rot, dx, dy):
    ring = Region(RegionKind.POLYGON, disk(1.0, 64), holes=(disk(0.5, 64)[::-1],))
    chain = Region(RegionKind.SEGMENT_CHAIN, np.array([[0, 0], [1, 0], [1, 1], [0, 1]]))
    for region, expected in ((ring, False), (chain, True)):
        assert complement_unbounded(region.transformed(rot, (dx, dy))) is expected


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_arc_distance_matches_dense_sampling(px, py):
    arc = Arc((0.2, -0.1), 1.3, 2.0, -0.5, clockwise=True)
    pts = arc.sample(200001)
    brute = np.min(np.linalg.norm(pts - [px, py], axis=1))
    assert arc.distance([px, py])[0] == pytest.approx(brute, abs=1e-4)


def test_arc_geometry():
    arc = Arc((0, 0), 2.0, 0.0, 0.5 * math.pi)
    assert arc.sweep == pytest.approx(0.5 * math.pi)
    assert arc.length == pytest.approx(math.pi)
    np.testing.assert_allclose(arc.point_at(1.0), [0, 2], atol=1e-12)


def test_region_json_round_trip(cex_w):
    for region in (cex_w.W, Region.segment((0, 0), (1, 0)), Region(RegionKind.POLYGON, disk(1.0, 8))):
        back = Region.from_json(region.to_json())
        pts = np.random.default_rng(0).uniform(-2, 2, (50, 2))
        np.testing.assert_allclose(back.distance(pts), region.distance(pts))


def test_bad_geometry_rejected():
    with pytest.raises(GeometryError):
        Arc((0, 0), -1.0, 0, 1)
    with pytest.raises(ValueError):
        Tolerances(integ_step=0)
    with pytest.raises(ParameterError):
        Tolerances(event_tol=float("nan"))


def test_branch_other_and_inclusion_lookup(cex_u):
    assert Branch.BRANCH1.other is Branch.BRANCH2
    assert cex_u.inc.field(Branch.BRANCH2) is cex_u.inc.branch2
    f = cex_u.inc.branch1
    with pytest.raises(ParameterError):
        Inclusion(f, f)


def shipped_inclusions():
    out = [models.make_counterexample_U().inc, models.make_counterexample_W().inc, models.make_islm_qyml()]
    out += [models.make_thm24_instance(k).inc for k in ("spiral", "axis")]
    return out


def test_jacobians_agree_with_finite_differences():
    rng = np.random.default_rng(1)
    for inc in shipped_inclusions():
        pts = rng.uniform(-3, 3, (20, 2))
        if inc.name == "islm-qyml":
            pts = pts * 10 + [135, 3]
        for f in inc:
            assert f.jacobian_error(pts) <= 1e-4


def test_negated_field():
    f = BranchField(Branch.BRANCH1, lambda x: x * 2.0, lambda x: 2 * np.eye(2))
    np.testing.assert_allclose(f.negated()(as_point((1, 2))), [-2, -4])
