import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffincl.core import Branch, DEFAULT_TOL, Region
from diffincl.errors import ConcatenationError, SearchExhaustedError
from diffincl.path import EnsembleGenerator, PathCurve, concatenate, curve_visits, is_simple
from diffincl.solution import detect_period, restrict, tile_periodic, verify_inclusion


@pytest.fixture(scope="module")
def gen_u(cex_u):
    return EnsembleGenerator(cex_u.X, switch_set=None)


def test_straight_path_is_simple(cex_u):
    x = cex_u.X["x_c1"]
    assert is_simple(PathCurve(x, 0.1, 0.9)).simple


def test_bounce_through_endpoints_is_not_simple(cex_u):
    x = cex_u.X["x_c1"]
    # c1 -> c2 -> c1 -> c2: the interior passes through both endpoints
    rep = is_simple(PathCurve(x, 0.0, 3.0))
    assert not rep.simple
    assert rep.revisit_times


def test_spiral_loop_is_simple(spiral_construction):
    loop = spiral_construction.loop
    assert is_simple(PathCurve(loop, loop.lo, loop.hi)).simple


@pytest.mark.parametrize("a,b,branch", [((0.25, 0), (0.75, 0), Branch.BRANCH1),
                                        ((0.75, 0), (0.25, 0), Branch.BRANCH2)])
def test_direct_paths_on_segment(gen_u, cex_u, a, b, branch):
    p = gen_u.find(a, b, cex_u.U)
    assert p.duration == pytest.approx(0.5, abs=1e-6)
    assert p.switch_count == 0 and p.first_branch == branch
    assert is_simple(p).simple


def test_equal_endpoints(gen_u, cex_u):
    loop = gen_u.find((0.5, 0), (0.5, 0), cex_u.U)
    # shortest closed path: out to an endpoint of U and back
    assert loop.duration == pytest.approx(1.0, abs=1e-6)
    assert is_simple(loop).simple
    with pytest.raises(SearchExhaustedError):
        gen_u.find((0.5, 0), (0.5, 0), cex_u.U, allow_loop=False)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_found_paths_are_simple_and_inside(gen_u, cex_u, a, b):
    if abs(a - b) < 1e-3:
        return
    p = gen_u.find((a, 0), (b, 0), cex_u.U)
    assert is_simple(p).simple
    assert np.all(cex_u.U.contains_all(p.states))


def test_concatenate_single_path(cex_u):
    p = PathCurve(cex_u.X["x_c1"], 0.0, 1.0)
    q, w = concatenate([p])
    assert q is p and w is p.source


def test_concatenate_bounce_gives_period_two(gen_u, cex_u):
    there = gen_u.find(cex_u.c1, cex_u.c2, cex_u.U)
    back = gen_u.find(cex_u.c2, cex_u.c1, cex_u.U)
    q, w = concatenate([there, back])
    assert q.duration == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(q.b, cex_u.c1, atol=DEFAULT_TOL.match_tol)
    tiled = tile_periodic(w, (-10, 10))
    assert detect_period(tiled) == pytest.approx(2.0, abs=1e-4)
    assert verify_inclusion(w, cex_u.inc).ok


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_round_trip_closes_a_loop(gen_u, cex_u, a, b):
    if abs(a - b) < 1e-2:
        return
    p = gen_u.find((a, 0), (b, 0), cex_u.U)
    r = gen_u.find((b, 0), (a, 0), cex_u.U)
    q, w = concatenate([p, r])
    np.testing.assert_allclose(q.a, q.b, atol=DEFAULT_TOL.match_tol)
    assert verify_inclusion(w, cex_u.inc).ok


def test_concatenation_is_associative(gen_u, cex_u):
    pts = [(0.1, 0), (0.6, 0), (0.3, 0), (0.9, 0)]
    p1, p2, p3 = (gen_u.find(a, b, cex_u.U) for a, b in zip(pts, pts[1:]))
    left, _ = concatenate([concatenate([p1, p2])[0], p3])
    right, _ = concatenate([p1, concatenate([p2, p3])[0]])
    t = np.linspace(left.t0, left.t1, 101)
    np.testing.assert_allclose(left.source(t), right.source(t - left.t0 + right.t0),
                               atol=DEFAULT_TOL.match_tol)


def test_mismatched_junction(cex_u):
    p = PathCurve(cex_u.X["x_c1"], 0.0, 0.5)
    q = PathCurve(cex_u.X["x_c1"], 0.6, 0.9)
    with pytest.raises(ConcatenationError) as info:
        concatenate([p, q])
    assert info.value.junction == 0


def test_restricted_switching_rejects_interior_turn(cex_u):
    gen = EnsembleGenerator(cex_u.X)
    p = gen.find((0.25, 0), (0.75, 0), cex_u.U)
    r = gen.find((0.75, 0), (0.25, 0), cex_u.U)
    with pytest.raises(ConcatenationError):
        concatenate([p, r], switch_set=gen.switch_set)


def test_curve_visits_counts_passes(cex_u):
    x = restrict(cex_u.X["x_c1"], 0.0, 4.0)
    visits = curve_visits(x.times, x.states, (0.5, 0), DEFAULT_TOL.match_tol)
    np.testing.assert_allclose(visits, [0.5, 1.5, 2.5, 3.5], atol=1e-6)


def test_flow_generator_paths(spiral, spiral_construction):
    gen = spiral.generator()
    V = spiral_construction.V
    a = spiral_construction.a
    for b in ((0.0, 0.5), (0.2, -0.3), tuple(spiral_construction.landing)):
        for x, y in ((a, b), (b, a)):
            p = gen.find(x, y, V)
            assert is_simple(p).simple
            assert np.all(V.contains_all(p.states))
            assert verify_inclusion(p.piece, spiral.inc).ok
