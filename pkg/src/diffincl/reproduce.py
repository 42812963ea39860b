"""End-to-end reproduction suites.

Each numbered criterion is a function returning a :class:`CriterionResult`
with its measured quantities; a suite is a tuple of criteria.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import models
from .chaos import devaney_check, entropy_estimate, omega_report, omega_scrambled_check, spanning_number
from .conditions import check_BV3, check_RS1, lemma36_witness
from .core import DEFAULT_TOL, Branch, Tolerances, as_point
from .integrator import integrate_branch
from .metric import DEFAULT_METRIC, PairwiseTable, nu
from .path import EnsembleGenerator
from .solution import detect_period, restrict, verify_inclusion


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: Optional[float] = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        return f"[{status}] {self.key} {self.title}: {self.runtime:.1f} s{budget}"

    def to_json(self) -> dict:
        return {"criterion": self.key, "title": self.title, "pass": self.passed,
                "runtime": self.runtime, "budget": self.budget, "measured": self.measured}


def _timed(key: str, title: str, budget: Optional[float] = None):
    def wrap(fn: Callable[..., tuple]):
        def run(seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
            t0 = time.perf_counter()
            ok, measured = fn(seed, tol)
            dt = time.perf_counter() - t0
            if budget is not None:
                measured["within_budget"] = dt < budget
                ok = ok and dt < budget
            return CriterionResult(key, title, bool(ok), measured, dt, budget)
        run.key, run.title = key, title
        return run
    return wrap


def _switch_intervals(sol, tau: float) -> list:
    """Branch durations inside one period starting at the first switch."""
    sw = sol.switch_times
    sw = sw[sw < sw[0] + tau - 1e-9] if len(sw) else sw
    nxt = np.append(sw[1:], sw[0] + tau)
    return sorted(float(v) for v in nxt - sw)


@_timed("C1", "segment bounce periodicity", budget=10.0)
def criterion_1(seed, tol):
    u = models.make_counterexample_U()
    out = {"X": {}, "X0": {}}
    ok = True
    for key, ens, tau in (("X", u.X, 2.0), ("X0", u.X0, 1.0)):
        for mid, m in zip(ens.ids, ens.members):
            p = detect_period(m, tol)
            iv = _switch_intervals(m, tau)
            good = p is not None and abs(p - tau) <= 1e-4 and len(iv) == 2 \
                and all(abs(v - tau / 2) <= 1e-4 for v in iv)
            out[key][mid] = {"period": p, "switch_intervals": iv, "pass": good}
            ok &= good
    return ok, out


@_timed("C2", "entropy collapse on the reference ensemble", budget=60.0)
def criterion_2(seed, tol):
    R = models.make_counterexample_U().rbar
    table = PairwiseTable(R, DEFAULT_METRIC)
    eps_list, s_list = (0.5, 0.2, 0.1), (1.0, 2.0, 5.0, 10.0)
    grid = {f"s={s:g},eps={e:g}": spanning_number(R, s, e, table=table).size for s in s_list for e in eps_list}
    rep = entropy_estimate(R, eps_list, s_list)
    spans_ok = all(v == 1 for v in grid.values())
    measured = {"members": len(R), "spanning_numbers": grid, "spanning_all_one": spans_ok,
                "entropy_estimate": rep.estimate, "entropy_ok": rep.estimate <= 1e-3}
    return len(R) >= 17 and spans_ok and rep.estimate <= 1e-3, measured


@_timed("C3", "sensitivity refuted on the enlarged ensemble")
def criterion_3(seed, tol):
    u = models.make_counterexample_U()
    rep = devaney_check(u.rhat, tol=tol, prefer="x_c1")
    at_c1 = [c for c in rep.certificates if c["member"] == "x_c1" and not c["vacuous"]]
    x = u.X["x_c1"]
    M = PairwiseTable(u.rhat).matrix()
    i = u.rhat.index("x_c1")
    worst = 0.0
    checked = []
    for mid, z in zip(u.X.ids, u.X.members):
        k = u.rhat.index(mid)
        if k == i or M[i, k] >= 0.25:
            continue
        d = np.linalg.norm(_diff(x, z), axis=1)
        excess = float(d.max() - np.linalg.norm(x(0.0) - z(0.0)))
        worst = max(worst, excess)
        checked.append(mid)
    ok = (not rep.sensitive) and bool(at_c1) and worst <= 1e-4
    return ok, {"sensitive": rep.sensitive, "certificates_at_x_c1": at_c1[:3], "bound_checked": checked,
                "max_excess": worst}


def _diff(x, z, grid: float = 1e-3):
    lo, hi = max(x.lo, z.lo), min(x.hi, z.hi)
    t = np.arange(lo, hi + 0.5 * grid, grid)
    t = t[t <= hi]
    return x(t) - z(t)


def _omega_and_scrambled(E, horizon, eps, tol):
    reps = omega_report(E, horizon, eps, tol=tol)
    scrambled = [(a, b) for a, b in itertools.combinations(E.ids, 2)
                 if omega_scrambled_check(E, a, b, reps).scrambled]
    return reps, scrambled


@_timed("C4", "omega-limit structure on the reference ensemble")
def criterion_4(seed, tol):
    u = models.make_counterexample_U()
    R = u.rbar
    reps, scrambled = _omega_and_scrambled(R, 10 * u.tau, 0.05, tol)
    full = {mid: sorted(set(R.ids) - set(e.omega)) for mid, e in reps.items()}
    all_full = all(not v for v in full.values())
    periodic = all(e.periodic for e in reps.values())
    ok = all_full and periodic and not scrambled
    return ok, {"missing_from_omega": {k: v for k, v in full.items() if v}, "all_periodic": periodic,
                "scrambled_pairs": scrambled, "pairs_checked": len(R) * (len(R) - 1) // 2}


@_timed("C5", "lens conditions and periodicity")
def criterion_5(seed, tol):
    w = models.make_counterexample_W()
    gen = EnsembleGenerator(w.S)
    rs1 = check_RS1(w.W, gen, n_pairs=30, seed=seed, tol=tol)
    bv3 = check_BV3(w.W, gen, w.inc, n_chains=20, max_len=4, seed=seed, tol=tol)
    oracle = 4.0 * math.atan2(1.0, models.LENS_OFFSET)
    periods = [detect_period(m, tol) for m in w.S]
    periods_ok = all(p is not None and abs(p - oracle) <= 1e-3 for p in periods)
    _, scrambled = _omega_and_scrambled(w.S, 10 * oracle, 0.05, tol)
    ok = rs1.passed and bv3.passed and periods_ok and not scrambled
    return ok, {"RS1": rs1.to_json(), "BV3": bv3.to_json(), "periods": periods, "period_oracle": oracle,
                "scrambled_pairs": scrambled}


@_timed("C6", "fixed-point construction and path conditions", budget=120.0)
def criterion_6(seed, tol):
    inst = models.make_thm24_instance("spiral")
    c = inst.construction(tol)
    oracle = np.array([math.exp(-0.2 * math.pi), 0.0])
    landing_err = float(np.linalg.norm(c.landing - oracle))
    gen = inst.generator(tol)
    rs1 = check_RS1(c.V, gen, n_pairs=50, seed=seed, tol=tol)
    kinds = {i["kind"] for i in rs1.instances}
    bv3 = check_BV3(c.V, gen, inst.inc, n_chains=20, max_len=4, seed=seed, tol=tol)
    ok = (landing_err <= 1e-4 and c.closure_gap <= 1e-4 and c.complement_unbounded and c.simple
          and rs1.passed and "both-on-loop" in kinds and bv3.passed)
    return ok, {"landing": c.landing, "landing_error": landing_err, "closure_gap": c.closure_gap,
                "complement_unbounded": c.complement_unbounded, "loop_simple": c.simple,
                "RS1": rs1.to_json(), "BV3": bv3.to_json()}


@_timed("C7", "alternating witness misses a ball")
def criterion_7(seed, tol):
    inst = models.make_thm24_instance("spiral")
    c = inst.construction(tol)
    w, rep = lemma36_witness(c, inst.generator(tol), c.a, c.landing, tol=tol, min_radius=0.01, seed=seed)
    inside = bool(np.all(c.V.contains_all(w.states)))
    ball = rep.witness
    ok = inside and rep.passed and ball is not None and ball[3] >= 0.01
    return ok, {"inside": inside, "center": None if ball is None else ball[2],
                "radius": None if ball is None else ball[3], "RS2": rep.to_json()}


@_timed("C8", "itinerary spanning growth")
def criterion_8(seed, tol):
    tau = models.make_thm24_instance("spiral").construction(tol).tau
    rows = []
    for n in (2, 3, 4):
        E = models.itinerary_ensemble(n)
        s = n * tau
        r = spanning_number(E, s, 0.05, method="exact")
        rows.append({"n": n, "s": s, "S": r.size, "method": r.method, "slope": math.log(r.size) / s})
    sizes = [r["S"] for r in rows]
    slopes = [r["slope"] for r in rows]
    increasing = all(a < b for a, b in zip(sizes, sizes[1:]))
    # equal slopes may differ in the last bits
    nondecreasing = all(b >= a - 1e-12 for a, b in zip(slopes, slopes[1:]))
    return increasing and nondecreasing, {"rows": rows}


def shipped_solutions(tol: Tolerances = DEFAULT_TOL) -> List[tuple]:
    """``(label, solution, inclusion)`` for every shipped solution."""
    u, w = models.make_counterexample_U(), models.make_counterexample_W()
    out = [(f"rhat/{m.name}", m, u.inc) for m in u.rhat] + [(f"stilde/{m.name}", m, w.inc) for m in w.S]
    spiral = models.make_thm24_instance("spiral")
    for n in (2, 3, 4):
        out += [(f"itineraries-n{n}/{m.name}", m, spiral.inc) for m in models.itinerary_ensemble(n)]
    for kind in ("spiral", "axis"):
        inst = models.make_thm24_instance(kind)
        out.append((f"thm24-{kind}/loop", inst.construction(tol).loop, inst.inc))
    spec = models.get_model("islm-qyml")
    out.append(("islm-qyml/default", spec.simulate(spec.x0, spec.initial_branch, (-30.0, 30.0), tol), spec.inc))
    return out


def order_factor(h: float = 0.1, t_end: float = 1.0) -> float:
    """Error ratio between steps ``h`` and ``h/2`` for ``x' = -x``."""
    sink = models.affine_field(Branch.BRANCH1, ((-1.0, 0.0), (0.0, -1.0)))
    x0 = as_point((1.0, 0.5))
    exact = x0 * math.exp(-t_end)
    errs = []
    for step in (h, h / 2):
        seg = integrate_branch(sink, x0, 0.0, t_end, Tolerances(integ_step=step))
        errs.append(float(np.linalg.norm(seg.end - exact)))
    return errs[0] / errs[1]


@_timed("C9", "metric, integrator and inclusion certification")
def criterion_9(seed, tol):
    rng = np.random.default_rng(seed)
    pool = [m for _, m, _ in shipped_solutions(tol) if min(-m.lo, m.hi) >= 30.0]
    worst = -np.inf
    for _ in range(100):
        i, k = rng.choice(len(pool), size=2, replace=False)
        T = float(rng.integers(5, 21))
        x, y = pool[i], pool[k]
        a = nu(restrict(x, -T, T), restrict(y, -T, T))[0]
        b = nu(restrict(x, -T - 5, T + 5), restrict(y, -T - 5, T + 5))[0]
        worst = max(worst, abs(a - b) - 2.0 ** -T)
    factor = order_factor()
    residuals = {label: verify_inclusion(sol, inc, tol).max_residual for label, sol, inc in shipped_solutions(tol)}
    max_res = max(residuals.values())
    ok = worst <= 0 and factor >= 8 and max_res <= 1e-3
    return ok, {"window_consistency_worst_excess": worst, "order_factor": factor,
                "max_inclusion_residual": max_res, "solutions_checked": len(residuals)}


@_timed("C10", "business-cycle model")
def criterion_10(seed, tol):
    p = models.EconParams.default()
    inc = models.make_islm_qyml(p)
    e1, e2 = models.islm_equilibria(p)
    r1 = float(np.linalg.norm(inc.branch1(e1)))
    r2 = float(np.linalg.norm(inc.branch2(e2)))
    spec = models.get_model("islm-qyml", p)
    sol = spec.simulate(spec.x0, spec.initial_branch, (-30.0, 30.0), tol)
    rep = models.detect_cycle_phases(sol)
    ok = r1 <= 1e-10 and r2 <= 1e-10 and rep.alternating and len(rep.events) >= 6
    return ok, {"equilibria": [e1, e2], "residuals": [r1, r2], "switches": len(rep.events),
                "alternating": rep.alternating, "kinds": rep.kinds}


CRITERIA: Dict[str, Callable] = {f.key: f for f in (criterion_1, criterion_2, criterion_3, criterion_4,
                                                    criterion_5, criterion_6, criterion_7, criterion_8,
                                                    criterion_9, criterion_10)}

SUITES = {
    "cex1": ("C1", "C2", "C3", "C4"),
    "cex2": ("C5",),
    "thm24": ("C6", "C8"),
    "lemma36": ("C7",),
    "certify": ("C9", "C10"),
}
SUITES["all"] = tuple(CRITERIA)


def run_suite(name: str, seed: int = 0, tol: Tolerances = DEFAULT_TOL, echo=None) -> List[CriterionResult]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    for key in SUITES[name]:
        res = CRITERIA[key](seed, tol)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
