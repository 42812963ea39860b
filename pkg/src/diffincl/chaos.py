"""Chaos indicators relative to a finite ensemble of solutions.

Every quantity here is computed for the ensemble, which stands in for the
full solution set: spanning numbers and the entropy estimate (a lower
bound), approximate omega-limit sets, an omega-scrambled check whose
uncountability condition is replaced by a refinement-growth proxy, and the
three ingredients of Devaney chaos.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import DEFAULT_TOL, Tolerances
from .errors import ParameterError, WindowError
from .metric import DEFAULT_METRIC, MetricConfig, PairwiseTable, shifted_below
from .solution import Ensemble, detect_period

EXACT_COVER_LIMIT = 20
POWER_GRID = tuple(2.0 ** -k for k in range(10, 0, -1))


# --- spanning numbers and entropy ------------------------------------------

@dataclass
class SpanResult:
    size: int
    cover: list
    method: str
    #: guaranteed ratio to the optimum (1 for exact search)
    factor: float = 1.0


def _exact_cover(sets: List[int], n: int) -> List[int]:
    """Smallest index list whose bitmasks cover all ``n`` elements."""
    full = (1 << n) - 1
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            acc = 0
            for i in combo:
                acc |= sets[i]
            if acc == full:
                return list(combo)
    return list(range(n))


def _greedy_cover(sets: List[int], n: int) -> List[int]:
    full = (1 << n) - 1
    covered, chosen = 0, []
    while covered != full:
        gains = [bin(s & ~covered).count("1") for s in sets]
        best = int(np.argmax(gains))
        chosen.append(best)
        covered |= sets[best]
    return chosen


def cover_from_matrix(M: np.ndarray, eps: float, ids: Sequence[str], method: str = "auto") -> SpanResult:
    """Minimal set of open balls ``{y : M[x, y] < eps}`` covering everything."""
    n = len(M)
    sets = [sum(1 << j for j in range(n) if M[i, j] < eps or i == j) for i in range(n)]
    if method == "auto":
        method = "exact" if n <= EXACT_COVER_LIMIT else "greedy"
    if method == "exact":
        chosen, factor = _exact_cover(sets, n), 1.0
    elif method == "greedy":
        chosen, factor = _greedy_cover(sets, n), math.log(n) + 1.0
    else:
        raise ParameterError(f"unknown cover method {method!r}")
    return SpanResult(len(chosen), [ids[i] for i in chosen], method, factor)


def spanning_number(E: Ensemble, s: float, eps: float, cfg: MetricConfig = DEFAULT_METRIC,
                    method: str = "auto", table: Optional[PairwiseTable] = None) -> SpanResult:
    """Smallest number of orbit-metric balls ``B(x, eps, s)`` centred at
    members that cover the ensemble (exact up to 20 members, greedy above)."""
    table = table or PairwiseTable(E, cfg)
    return cover_from_matrix(table.matrix(s), eps, E.ids, method)


@dataclass
class EntropyReport:
    ensemble: str
    rows: list
    slopes: dict
    growth: dict
    estimate: float
    method: str
    label: str = "LOWER BOUND"

    def table(self, eps: float) -> Dict[float, int]:
        return {r["s"]: r["S"] for r in self.rows if r["eps"] == eps}

    def to_json(self) -> dict:
        return {"ensemble": self.ensemble, "label": self.label, "method": self.method,
                "rows": self.rows, "estimate": self.estimate,
                "slopes": [{"eps": e, "s": s, "slope": v} for (e, s), v in sorted(self.slopes.items())],
                "growth": [{"eps": e, "slope": v} for e, v in sorted(self.growth.items())],
                "note": "computed on a finite ensemble; only growth can be certified"}


def entropy_estimate(E: Ensemble, eps_list: Sequence[float], s_list: Sequence[float],
                     cfg: MetricConfig = DEFAULT_METRIC, method: str = "auto") -> EntropyReport:
    """Tabulate spanning numbers and estimate the entropy from below.

    For each ``eps`` the growth rate is ``(log S(s2) - log S(s1)) / (s2 - s1)``
    between the two largest horizons; the estimate is the largest such rate
    (clipped at 0).  The plain ratios ``log S / s`` are reported as well.
    """
    table = PairwiseTable(E, cfg)
    s_list = sorted(float(s) for s in s_list)
    rows, slopes, growth = [], {}, {}
    used = "exact" if (method == "auto" and len(E) <= EXACT_COVER_LIMIT) else method
    mats = {s: table.matrix(s) for s in s_list}
    for eps in sorted(float(e) for e in eps_list):
        for s in s_list:
            res = cover_from_matrix(mats[s], eps, E.ids, method)
            used = res.method
            rows.append({"eps": eps, "s": s, "S": res.size, "cover": res.cover})
            slopes[(eps, s)] = math.log(res.size) / s if s > 0 else 0.0
        if len(s_list) >= 2:
            s1, s2 = s_list[-2], s_list[-1]
            S1 = next(r["S"] for r in rows if r["eps"] == eps and r["s"] == s1)
            S2 = next(r["S"] for r in rows if r["eps"] == eps and r["s"] == s2)
            growth[eps] = (math.log(S2) - math.log(S1)) / (s2 - s1)
        else:
            growth[eps] = slopes[(eps, s_list[-1])]
    estimate = max(0.0, max(growth.values())) if growth else 0.0
    return EntropyReport(E.name, rows, slopes, growth, estimate, used)


# --- omega-limit sets ------------------------------------------------------

@dataclass
class OmegaEntry:
    member: str
    omega: list
    returns: dict
    periodic: bool
    period: Optional[float]
    inconclusive: bool
    horizon: float
    eps: float

    def to_json(self) -> dict:
        return {"member": self.member, "omega": self.omega, "returns": self.returns,
                "periodic": self.periodic, "period": self.period,
                "inconclusive": self.inconclusive, "horizon": self.horizon, "eps": self.eps}


def _episodes(hits: np.ndarray, times: np.ndarray) -> list:
    """Closest-to-centre time of each maximal run of True values."""
    if not np.any(hits):
        return []
    idx = np.nonzero(hits)[0]
    runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
    return [float(times[r[len(r) // 2]]) for r in runs]


def omega_limit(E: Ensemble, x, horizon: float, eps: float, cfg: MetricConfig = DEFAULT_METRIC,
                tol: Tolerances = DEFAULT_TOL, min_returns: int = 3) -> OmegaEntry:
    """Members approached recurrently by late shifts of ``x``.

    ``y`` is in the approximate omega-limit set when ``nu(T_t x, y) < eps``
    happens in at least ``min_returns`` separate episodes among the grid
    shifts ``t`` in the upper half of ``(0, horizon]``.  The entry is flagged
    inconclusive when ``x`` is periodic but the horizon holds fewer than
    three periods.
    """
    idx = E.index(x) if isinstance(x, str) else int(x)
    xm = E.members[idx]
    if horizon > xm.hi:
        raise WindowError(f"horizon {horizon} exceeds the stored window")
    g = cfg.grid
    k_lo = math.ceil(0.5 * horizon / g)
    k_hi = math.floor(horizon / g + 1e-9)
    shifts = np.arange(k_lo, k_hi + 1) * g
    period = detect_period(xm, tol)
    omega, returns = [], {}
    for yid, y in zip(E.ids, E.members):
        hits = shifted_below(xm, y, shifts, eps, cfg)
        eps_times = _episodes(hits, shifts)
        if len(eps_times) >= min_returns:
            omega.append(yid)
            returns[yid] = eps_times
    inconclusive = period is not None and horizon < 3 * period
    return OmegaEntry(E.ids[idx], omega, returns, period is not None, period, inconclusive, horizon, eps)


def omega_report(E: Ensemble, horizon: float, eps: float, cfg: MetricConfig = DEFAULT_METRIC,
                 tol: Tolerances = DEFAULT_TOL) -> Dict[str, OmegaEntry]:
    return {mid: omega_limit(E, k, horizon, eps, cfg, tol) for k, mid in enumerate(E.ids)}


@dataclass
class ScrambledVerdict:
    x: str
    y: str
    condition1: bool
    condition2: bool
    condition3: bool
    evidence: dict = field(default_factory=dict)
    label: str = "PROXY"

    @property
    def scrambled(self) -> bool:
        return self.condition1 and self.condition2 and self.condition3

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "condition1": self.condition1, "condition1_label": self.label,
                "condition2": self.condition2, "condition3": self.condition3,
                "scrambled": self.scrambled, "evidence": self.evidence}


def omega_scrambled_check(E: Ensemble, x: str, y: str, reports: Dict[str, OmegaEntry],
                          coarse: Optional[Dict[str, OmegaEntry]] = None) -> ScrambledVerdict:
    """Check the three omega-scrambling conditions for the pair ``x, y``.

    Condition 1 (an uncountable difference) is replaced by a proxy: the size
    of ``omega(x) \\ omega(y)`` must be positive and strictly larger in
    ``reports`` than in the ``coarse`` reports of a sub-ensemble.  Without
    ``coarse`` reports the proxy compares against the even-indexed half of
    the ensemble.  Conditions 2 and 3 are read off the finite reports.
    """
    if x == y:
        return ScrambledVerdict(x, y, False, False, False, {"guard": "x and y must differ"})
    ox, oy = set(reports[x].omega), set(reports[y].omega)
    diff_fine = ox - oy
    if coarse is not None:
        cx = set(coarse[x].omega) if x in coarse else set()
        cy = set(coarse[y].omega) if y in coarse else set()
        diff_coarse = cx - cy
    else:
        half = set(E.ids[::2]) | {x, y}
        diff_coarse = (ox & half) - (oy & half)
    cond1 = len(diff_fine) > 0 and len(diff_fine) > len(diff_coarse)
    cond2 = len(ox & oy) > 0
    non_periodic = [z for z in ox if z in reports and not reports[z].periodic]
    cond3 = len(non_periodic) > 0
    evidence = {"difference_counts": [len(diff_coarse), len(diff_fine)],
                "intersection": sorted(ox & oy), "non_periodic_in_omega_x": sorted(non_periodic)}
    return ScrambledVerdict(x, y, cond1, cond2, cond3, evidence)


# --- Devaney ingredients ---------------------------------------------------

@dataclass
class DevaneyReport:
    transitive: bool
    periodic_dense: bool
    sensitive: bool
    sensitivity_constant: Optional[float]
    certificates: list
    eps: float
    s_test: float
    details: dict = field(default_factory=dict)

    @property
    def chaotic(self) -> bool:
        return self.transitive and self.periodic_dense and self.sensitive

    def to_json(self) -> dict:
        return {"transitive": self.transitive, "periodic_dense": self.periodic_dense,
                "sensitive": self.sensitive, "sensitivity_constant": self.sensitivity_constant,
                "certificates": self.certificates, "eps": self.eps, "s_test": self.s_test,
                "chaotic": self.chaotic, "details": self.details,
                "note": "evaluated on a finite ensemble closed under the shift grid"}


def _sensitivity(M0: np.ndarray, Ms: np.ndarray, ids, prefer: int = 0):
    """Scan the delta grid.  Returns ``(constant or None, certificates)``.

    At ``delta`` the ensemble is sensitive when every non-vacuous ball
    ``B(x, eps)``, ``eps < delta`` from the power grid, holds a companion
    whose orbit separation exceeds ``delta``, and at least one non-vacuous
    ball exists.  A refutation names a member and a non-vacuous ball whose
    companions all stay within ``delta``.
    """
    n = len(M0)
    order = [prefer] + [i for i in range(n) if i != prefer]
    constant, certs = None, []
    for delta in sorted(POWER_GRID, reverse=True):
        refutation, tested = None, 0
        for i in order:
            for eps in POWER_GRID:
                if eps >= delta:
                    continue
                comp = [j for j in range(n) if j != i and M0[i, j] < eps]
                if not comp:
                    continue
                tested += 1
                if max(Ms[i, j] for j in comp) <= delta and refutation is None:
                    refutation = {"delta": delta, "member": ids[i], "eps": eps,
                                  "companions": [ids[j] for j in comp],
                                  "max_separation": float(max(Ms[i, j] for j in comp)),
                                  "vacuous": False}
            if refutation is not None:
                break
        if refutation is None and tested == 0:
            refutation = {"delta": delta, "member": None, "eps": None, "companions": [],
                          "max_separation": None, "vacuous": True}
        if refutation is None:
            constant = delta if constant is None else max(constant, delta)
        else:
            certs.append(refutation)
    return constant, certs


def devaney_check(E: Ensemble, cfg: MetricConfig = DEFAULT_METRIC, eps: float = 0.1,
                  s_test: Optional[float] = None, reach_horizon: float = 10.0, reach_step: float = 0.05,
                  tol: Tolerances = DEFAULT_TOL, prefer: Optional[str] = None) -> DevaneyReport:
    """Transitivity, density of periodic members and sensitivity on ``E``.

    * transitivity: for every ordered pair ``(u, v)`` some member ``z`` with
      ``nu(z, u) < eps`` has a shift ``t`` in ``[0, reach_horizon]`` with
      ``nu(T_t z, v) < eps``;
    * periodic density: every member lies within ``eps`` of a member with a
      detected period;
    * sensitivity: see :func:`_sensitivity`, with orbit separation measured
      by the orbit metric over ``|t| <= s_test`` (default: half the stored
      half-width).
    """
    n = len(E)
    table = PairwiseTable(E, cfg)
    if s_test is None:
        s_test = 0.5 * table.half_width
    M0 = table.matrix(None)
    Ms = table.matrix(s_test)
    periods = [detect_period(m, tol) for m in E.members]
    periodic = [p is not None for p in periods]
    periodic_dense = all(any(periodic[j] and (j == i or M0[i, j] < eps) for j in range(n)) for i in range(n))
    shifts = np.arange(0, math.floor(reach_horizon / reach_step) + 1) * reach_step
    shifts = np.round(shifts / cfg.grid) * cfg.grid
    reach = np.zeros((n, n), dtype=bool)
    for z in range(n):
        for v in range(n):
            reach[z, v] = bool(np.any(shifted_below(E.members[z], E.members[v], shifts, eps, cfg)))
    near = (M0 < eps) | np.eye(n, dtype=bool)
    missing = [(E.ids[u], E.ids[v]) for u in range(n) for v in range(n)
               if not np.any(near[:, u] & reach[:, v])]
    transitive = not missing
    pref = E.index(prefer) if prefer is not None else 0
    constant, certs = _sensitivity(M0, Ms, E.ids, pref)
    sensitive = constant is not None
    details = {"periods": {i: p for i, p in zip(E.ids, periods)},
               "non_transitive_pairs": missing[:20], "n_non_transitive_pairs": len(missing)}
    return DevaneyReport(transitive, periodic_dense, sensitive, constant,
                         [] if sensitive else certs, eps, s_test, details)
