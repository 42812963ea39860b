import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffincl import models
from diffincl.chaos import (cover_from_matrix, devaney_check, entropy_estimate, omega_limit, omega_report,
                            omega_scrambled_check, spanning_number)
from diffincl.core import Branch, Inclusion
from diffincl.metric import nu
from diffincl.solution import Ensemble, Schedule, build_from_schedule


def brute_cover(M, eps):
    n = len(M)
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            if np.all(np.any(M[list(combo)] < eps, axis=0)):
                return k
    raise AssertionError("unreachable")


@st.composite
def metric_matrices(draw):
    n = draw(st.integers(1, 8))
    pts = np.array(draw(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=n, max_size=n)))
    M = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    return M


@settings(max_examples=60, deadline=None)
@given(metric_matrices(), st.floats(0.05, 0.8))
def test_exact_cover_is_minimal(M, eps):
    ids = [f"m{i}" for i in range(len(M))]
    exact = cover_from_matrix(M, eps, ids, "exact")
    assert exact.size == brute_cover(M, eps)
    greedy = cover_from_matrix(M, eps, ids, "greedy")
    covered = np.any(M[[ids.index(c) for c in greedy.cover]] < eps, axis=0)
    assert covered.all()
    assert exact.size <= greedy.size <= greedy.factor * exact.size


def test_singleton_spans_itself(cex_u):
    E = Ensemble((cex_u.X[0],), "one")
    assert spanning_number(E, 1.0, 0.1).size == 1


def circle_cover(n, spacing, eps):
    """Minimal number of open eps-balls covering n equally spaced points on a
    circle when the distance is the arc distance."""
    m = math.ceil(eps / spacing) - 1  # neighbours strictly closer than eps per side
    return math.ceil(n / (2 * m + 1))


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
@pytest.mark.parametrize("s", [1.0, 2.0, 5.0, 10.0])
def test_reference_ensemble_spanning_numbers(cex_u, s, eps):
    # each member is the bounce at one of 18 phases spaced 1/9 apart on the
    # period-2 cycle; beyond s = 1 the orbit distance is the phase gap
    got = spanning_number(cex_u.rbar, s, eps)
    assert got.size == circle_cover(18, 1 / 9, eps)
    assert got.method == "exact"


def test_reference_ensemble_entropy_is_zero(cex_u):
    rep = entropy_estimate(cex_u.rbar, (0.5, 0.2, 0.1), (1.0, 2.0, 5.0, 10.0))
    assert rep.estimate == 0.0
    assert rep.label == "LOWER BOUND"
    for eps in (0.1, 0.2, 0.5):
        table = rep.table(eps)
        sizes = [table[s] for s in sorted(table)]
        assert sizes == sorted(sizes)
    for s in (1.0, 10.0):
        assert rep.table(0.1)[s] >= rep.table(0.2)[s] >= rep.table(0.5)[s]


def test_single_line_has_zero_entropy():
    inc = Inclusion(models.constant_field(Branch.BRANCH1, (1, 0)), models.constant_field(Branch.BRANCH2, (-1, 0)))
    line = build_from_schedule(inc, (0, 0), Schedule((), Branch.BRANCH1, (-40, 40)))
    rep = entropy_estimate(Ensemble((line,), "line"), (0.1,), (1.0, 5.0))
    assert rep.estimate == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_itinerary_growth(spiral_construction, n):
    tau = spiral_construction.tau
    E = models.itinerary_ensemble(n)
    got = spanning_number(E, n * tau, 0.05)
    assert got.size == 2 ** n
    assert math.log(got.size) / (n * tau) == pytest.approx(math.log(2) / tau, rel=1e-12)


def test_omega_of_reference_members(cex_u):
    R = cex_u.rbar
    for k in (0, 1, 7):
        entry = omega_limit(R, k, 20.0, 0.05)
        assert set(entry.omega) == set(R.ids)
        assert entry.periodic and R.ids[k] in entry.omega


def test_omega_of_lens_members(cex_w):
    S = cex_w.S
    for k in (0, 5):
        assert set(omega_limit(S, k, 10 * cex_w.tau, 0.05).omega) == set(S.ids)


def test_straight_lines_have_empty_omega():
    inc = Inclusion(models.constant_field(Branch.BRANCH1, (1, 0)), models.constant_field(Branch.BRANCH2, (-1, 0)))
    lines = [build_from_schedule(inc, (0, y), Schedule((), Branch.BRANCH1, (-40, 40))).with_name(f"l{y}")
             for y in (0.0, 0.5)]
    E = Ensemble(tuple(lines), "lines")
    for k in range(2):
        entry = omega_limit(E, k, 20.0, 0.05)
        assert entry.omega == [] and not entry.periodic


def test_no_scrambled_pairs(cex_u, cex_w):
    for E, horizon in ((cex_u.rbar, 20.0), (cex_w.S, 10 * cex_w.tau)):
        reps = omega_report(E, horizon, 0.05)
        for a, b in itertools.combinations(E.ids[:6], 2):
            verdict = omega_scrambled_check(E, a, b, reps)
            assert not verdict.scrambled
            assert verdict.label == "PROXY"
        same = omega_scrambled_check(E, E.ids[0], E.ids[0], reps)
        assert not same.scrambled


def test_devaney_on_enlarged_ensemble(cex_u):
    rep = devaney_check(cex_u.rhat, prefer="x_c1")
    assert not rep.sensitive
    assert rep.periodic_dense
    assert any(c["member"] == "x_c1" and not c["vacuous"] for c in rep.certificates)


def test_devaney_on_singleton(cex_u):
    rep = devaney_check(Ensemble((cex_u.X[0],), "one"))
    assert rep.transitive and not rep.sensitive


def test_c1_distance_never_grows(cex_u):
    x = cex_u.X["x_c1"]
    t = np.arange(-40, 40.0005, 0.01)
    for z in cex_u.X:
        if z.name == "x_c1":
            continue
        d0 = np.linalg.norm(x(0.0) - z(0.0))
        if nu(x, z)[0] < 0.25:
            assert np.max(np.linalg.norm(x(t) - z(t), axis=1)) <= d0 + 1e-5
