import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffincl import models
from diffincl.conditions import (build_alternating_witness, check_BV3, check_RS1, check_RS2,
                                 construct_V_from_fixed_point, lemma36_witness, sample_region)
from diffincl.core import Branch, DEFAULT_TOL, Inclusion, Region, RegionKind
from diffincl.errors import ParameterError
from diffincl.path import EnsembleGenerator, PathCurve
from diffincl.solution import Schedule, build_from_schedule, detect_period, verify_inclusion


@pytest.fixture(scope="module")
def free_u(cex_u):
    return EnsembleGenerator(cex_u.X, switch_set=None)


def test_rs1_on_segment(cex_u, free_u):
    rep = check_RS1(cex_u.U, free_u, n_pairs=30, seed=3)
    assert rep.passed and rep.n == 30 and rep.seed == 3


def test_rs1_on_lens(cex_w):
    assert check_RS1(cex_w.W, EnsembleGenerator(cex_w.S), n_pairs=30).passed


def test_rs1_fails_on_unreachable_region(free_u):
    far = Region.segment((10, 10), (11, 10))
    rep = check_RS1(far, free_u, n_pairs=5)
    assert not rep.passed
    assert all("error" in i for i in rep.failures())


def test_rs2_with_sub_cycle_witness(cex_u):
    rep = check_RS2(cex_u.U, list(cex_u.rhat.members), ids=cex_u.rhat.ids)
    assert rep.passed
    assert rep.witness[0].startswith("x0_")


def test_rs2_fails_with_covering_cycles_only(cex_u):
    assert not check_RS2(cex_u.U, list(cex_u.X.members)).passed


def test_rs2_fails_on_a_point():
    still = Inclusion(models.constant_field(Branch.BRANCH1, (0, 0)), models.constant_field(Branch.BRANCH2, (0, 0)))
    eq = build_from_schedule(still, (0.3, 0.3), Schedule((), Branch.BRANCH1, (-1, 1)))
    point = Region(RegionKind.SEGMENT_CHAIN, np.array([[0.3, 0.3]]))
    assert not check_RS2(point, [eq]).passed


def test_bv3_on_segment(cex_u, free_u):
    rep = check_BV3(cex_u.U, free_u, cex_u.inc, n_chains=20, seed=1)
    assert rep.passed
    first = rep.instances[0]
    assert first["length"] == 2 and first["points"][0] == first["points"][2]


def test_bv3_planted_restriction_names_junction(cex_u):
    rep = check_BV3(cex_u.U, EnsembleGenerator(cex_u.X), cex_u.inc, n_chains=10, seed=1)
    assert not rep.passed
    assert any("junction" in i for i in rep.failures())


def test_alternating_witness_on_segment(cex_u, free_u):
    p_ab = free_u.find(cex_u.c1, cex_u.c2, cex_u.U)
    p_ba = free_u.find(cex_u.c2, cex_u.c1, cex_u.U)
    w = build_alternating_witness(p_ab, p_ba, 3)
    assert w.window == pytest.approx((0.0, 6.0), abs=1e-6)
    for t in range(7):
        np.testing.assert_allclose(w(float(t)), [t % 2, 0], atol=1e-8)


def test_alternating_witness_on_sub_segment(cex_u, free_u):
    a, b = (0.2, 0), (0.7, 0)
    w = build_alternating_witness(free_u.find(a, b, cex_u.U), free_u.find(b, a, cex_u.U), 2)
    assert w.window == pytest.approx((0.0, 2.0), abs=1e-6)
    assert w.states[:, 0].min() == pytest.approx(0.2, abs=1e-6)
    assert w.states[:, 0].max() == pytest.approx(0.7, abs=1e-6)


def test_alternating_witness_on_lens(cex_w):
    gen = EnsembleGenerator(cex_w.S)
    w = build_alternating_witness(gen.find(cex_w.c1, cex_w.c2), gen.find(cex_w.c2, cex_w.c1), 3)
    s0 = cex_w.S["s_00"]
    t = np.linspace(0, w.hi, 301)
    np.testing.assert_allclose(w(t), s0(t), atol=1e-5)


def test_spiral_construction(spiral_construction):
    c = spiral_construction
    # radius e^{-0.1 t} after one turn of angle 2 pi
    np.testing.assert_allclose(c.landing, [math.exp(-0.2 * math.pi), 0], atol=1e-6)
    assert c.closure_gap <= 1e-4
    assert c.V.kind is RegionKind.POLYGON and c.V.has_interior
    assert c.simple and c.complement_unbounded
    first = c.loop.segments[0]
    assert first.branch == Branch.BRANCH1
    assert first.t_end - first.t_start == pytest.approx(2 * math.pi, abs=1e-6)


def test_axis_construction():
    inst = models.make_thm24_instance("axis")
    c = inst.construction()
    np.testing.assert_allclose(c.landing, [0.5, 0], atol=1e-6)
    assert c.V.kind is RegionKind.SEGMENT_CHAIN and not c.V.has_interior
    assert c.V.contains((1.2, 0)) and not c.V.contains((0.4, 0))
    # sink from 2 to 0.5 takes ln 4, the jet back takes 1.5
    assert c.tau == pytest.approx(math.log(4) + 1.5, abs=1e-5)


def test_construction_rejects_base_at_fixed_point(spiral):
    with pytest.raises(ParameterError):
        construct_V_from_fixed_point(spiral.inc, (0, 0), (0, 0))


def test_spiral_rs1_and_bv3(spiral, spiral_construction):
    gen = spiral.generator()
    V = spiral_construction.V
    rs1 = check_RS1(V, gen, n_pairs=12, seed=5)
    assert rs1.passed
    assert "both-on-loop" in {i["kind"] for i in rs1.instances}
    assert check_BV3(V, gen, spiral.inc, n_chains=5, seed=5).passed


def test_lemma36_witness(spiral, spiral_construction):
    c = spiral_construction
    w, rep = lemma36_witness(c, spiral.generator(), c.a, c.landing)
    assert np.all(c.V.contains_all(w.states))
    assert rep.passed
    _, _, center, radius = rep.witness
    assert radius >= 0.01
    assert c.V.interior_radius(center)[0] >= radius - 1e-12
    assert np.min(np.linalg.norm(w.states - center, axis=1)) >= radius - 1e-12
    assert verify_inclusion(w, spiral.inc).ok


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_samples_lie_in_region(cex_w, spiral_construction, seed):
    rng = np.random.default_rng(seed)
    for V in (cex_w.W, spiral_construction.V, Region.segment((0, 0), (1, 0))):
        assert np.all(V.contains_all(sample_region(V, 50, rng)))
