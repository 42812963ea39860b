"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test runs the criterion exactly as ``diffincl reproduce`` does, adds
its pass/fail line to the terminal summary, then checks the measured values
against an independent oracle where one exists.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import ACCEPTANCE_LINES
from diffincl import models
from diffincl.reproduce import CRITERIA


def run(key):
    res = CRITERIA[key](0)
    ACCEPTANCE_LINES.append(res.line())
    print(res.line())
    return res


def test_c1_segment_bounce_periodicity():
    res = run("C1")
    m = res.measured
    assert len(m["X"]) >= 16 and len(m["X0"]) >= 16
    # X bounces between the segment ends at unit speed over length 1
    for v in m["X"].values():
        assert v["period"] == pytest.approx(2.0, abs=1e-4)
        assert v["switch_intervals"] == pytest.approx([1.0, 1.0], abs=1e-4)
    for v in m["X0"].values():
        assert v["period"] == pytest.approx(1.0, abs=1e-4)
    assert res.runtime < 10.0
    assert res.passed


def test_c2_entropy_collapse():
    res = run("C2")
    m = res.measured
    assert m["members"] >= 17
    assert m["entropy_estimate"] <= 1e-3
    # every spanning number is required to be 1; the measured grid is
    # reported in full when it is not
    assert m["spanning_all_one"], f"spanning numbers {m['spanning_numbers']}"
    assert res.passed


def test_c3_sensitivity_refuted():
    res = run("C3")
    m = res.measured
    assert m["sensitive"] is False
    assert m["certificates_at_x_c1"] and m["bound_checked"]
    assert m["max_excess"] <= 1e-4
    assert res.passed


def test_c4_omega_structure():
    res = run("C4")
    m = res.measured
    assert not m["missing_from_omega"]
    assert m["all_periodic"]
    assert m["scrambled_pairs"] == [] and m["pairs_checked"] >= 136
    assert res.passed


def test_c5_lens_conditions():
    res = run("C5")
    m = res.measured
    oracle = 4 * math.atan2(1.0, 0.75)
    assert oracle == pytest.approx(3.7092, abs=1e-4)
    assert all(p == pytest.approx(oracle, abs=1e-3) for p in m["periods"])
    assert m["RS1"]["n_instances"] >= 30 and m["RS1"]["pass"]
    assert m["BV3"]["n_instances"] >= 20 and m["BV3"]["pass"]
    assert m["scrambled_pairs"] == []
    assert res.passed


def test_c6_fixed_point_construction():
    res = run("C6")
    m = res.measured
    # one full turn of the linear spiral from (1, 0), via the matrix exponential
    landing = expm(2 * math.pi * np.array(models.SPIRAL_MATRIX)) @ [1.0, 0.0]
    np.testing.assert_allclose(landing, [math.exp(-0.2 * math.pi), 0.0], atol=1e-12)
    assert np.linalg.norm(np.asarray(m["landing"]) - landing) <= 1e-4
    assert m["closure_gap"] <= 1e-4
    assert m["complement_unbounded"]
    assert m["RS1"]["n_instances"] >= 50 and m["RS1"]["pass"]
    assert "both-on-loop" in {i["kind"] for i in m["RS1"]["instances"]}
    assert m["BV3"]["n_instances"] >= 20 and m["BV3"]["pass"]
    assert res.runtime < 120.0
    assert res.passed


def test_c7_alternating_witness():
    res = run("C7")
    m = res.measured
    assert m["inside"]
    assert m["radius"] >= 0.01
    spiral = models.make_thm24_instance("spiral")
    V = spiral.construction().V
    # the certified ball lies in V
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    rim = np.asarray(m["center"]) + m["radius"] * np.c_[np.cos(theta), np.sin(theta)]
    assert V.contains_all(rim).all()
    assert res.passed


def test_c8_itinerary_growth():
    res = run("C8")
    rows = res.measured["rows"]
    tau = models.make_thm24_instance("spiral").construction().tau
    # binary words of length n stay pairwise separated over n loops
    assert [r["S"] for r in rows] == [4, 8, 16]
    for r in rows:
        assert r["slope"] == pytest.approx(math.log(2) / tau, rel=1e-12)
    assert res.passed


def test_c9_certification():
    res = run("C9")
    m = res.measured
    assert m["window_consistency_worst_excess"] <= 0
    assert m["order_factor"] >= 8
    assert m["max_inclusion_residual"] <= 1e-3
    assert m["solutions_checked"] >= 60
    assert res.passed


def test_c10_business_cycle():
    res = run("C10")
    m = res.measured
    p = models.EconParams.default()
    # independent linear solve of both affine branches
    for (A, c), e in zip((p.recession_system(), p.expansion_system()), m["equilibria"]):
        np.testing.assert_allclose(e, np.linalg.solve(np.asarray(A), -np.asarray(c)), rtol=1e-12)
    assert max(m["residuals"]) <= 1e-10
    assert m["switches"] >= 6
    kinds = m["kinds"]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    assert res.passed
