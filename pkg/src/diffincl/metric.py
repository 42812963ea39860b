"""The solution-space metric and its orbit-segment version.

For solutions ``x, y`` the pointwise distance is
``nu_t(x, y) = min(|x(t) - y(t)|, cap)`` and

    nu(x, y) = sup_t nu_t(x, y) / 2**|t|.

The supremum is taken over the multiples of ``cfg.grid`` inside the common
window; since ``nu_t <= 1`` the part of the line outside the window adds at
most ``2**-T`` where ``T`` is the distance from 0 to the nearest window end.

The orbit metric ``nu_s(x, y) = max_{|t| <= s} nu(T_t x, T_t y)`` is computed
on the same grid.  Shifting both solutions by a grid time ``t`` moves the
weight of grid point ``t_j`` to ``2**-|t_j - t|``, so maximising over
``|t| <= S`` (``S`` the largest grid time not above ``s``) gives

    nu_s(x, y) = max_j D_j * 2**-max(0, |t_j| - S),   D_j = nu_{t_j}(x, y),

which equals the literal maximum over shifted pairs on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError, WindowError
from .solution import Ensemble, SolutionWindow


@dataclass(frozen=True)
class MetricConfig:
    """``grid`` is the time step of the sup discretization, ``cap`` the
    constant in ``min(d, cap)``."""

    grid: float = 1e-2
    cap: float = 1.0

    def __post_init__(self):
        if not self.grid > 0:
            raise ParameterError("metric grid must be positive")
        if not self.cap > 0:
            raise ParameterError("cap must be positive")


DEFAULT_METRIC = MetricConfig()


def nu_t(x: SolutionWindow, y: SolutionWindow, t: float, cap: float = 1.0) -> float:
    """``min(|x(t) - y(t)|, cap)``; raises :class:`WindowError` outside
    either window."""
    d = float(np.linalg.norm(x(t) - y(t)))
    return min(d, cap)


def common_grid(x: SolutionWindow, y: SolutionWindow, grid: float):
    """Grid indices and resampled states of ``x`` and ``y`` on their common
    window: returns ``(j, X, Y)``."""
    jx, X = x.resample(grid)
    jy, Y = y.resample(grid)
    lo = max(jx, jy)
    hi = min(jx + len(X), jy + len(Y))
    if hi <= lo:
        raise WindowError("solutions have no common window")
    return np.arange(lo, hi), X[lo - jx:hi - jx], Y[lo - jy:hi - jy]


def pointwise(x: SolutionWindow, y: SolutionWindow, cfg: MetricConfig = DEFAULT_METRIC):
    """Grid times and capped distances ``D_j`` on the common window."""
    j, X, Y = common_grid(x, y, cfg.grid)
    return j * cfg.grid, np.minimum(np.linalg.norm(X - Y, axis=1), cfg.cap)


def truncation_bound(x: SolutionWindow, y: SolutionWindow) -> float:
    lo = max(x.lo, y.lo)
    hi = min(x.hi, y.hi)
    reach = min(-lo, hi)
    return 2.0 ** -reach if reach > 0 else 1.0


def nu(x: SolutionWindow, y: SolutionWindow, cfg: MetricConfig = DEFAULT_METRIC) -> Tuple[float, float]:
    """Return ``(value, trunc_bound)``.

    ``value`` is the grid maximum of ``nu_t / 2**|t|`` on the common window, a
    lower bound of the true supremum; the true value exceeds it by at most
    ``trunc_bound = 2**-T`` plus the variation of ``nu_t`` between grid
    points.
    """
    t, D = pointwise(x, y, cfg)
    return float(np.max(D * np.exp2(-np.abs(t)))), truncation_bound(x, y)


def _check_shift_range(x: SolutionWindow, y: SolutionWindow, s: float):
    reach = min(x.half_width, y.half_width)
    if s < 0:
        raise ParameterError("s must be non-negative")
    if s >= reach:
        raise WindowError(f"shift range {s} exhausts the stored window (half-width {reach})")


def orbit_weights(t: np.ndarray, s: float, grid: float) -> np.ndarray:
    S = math.floor(s / grid + 1e-9) * grid
    return np.exp2(-np.maximum(0.0, np.abs(t) - S))


def orbit_metric(x: SolutionWindow, y: SolutionWindow, s: float,
                 cfg: MetricConfig = DEFAULT_METRIC) -> float:
    """``max`` over grid shifts ``|t| <= s`` of ``nu(T_t x, T_t y)``."""
    _check_shift_range(x, y, s)
    t, D = pointwise(x, y, cfg)
    return float(np.max(D * orbit_weights(t, s, cfg.grid)))


class PairwiseTable:
    """Capped pointwise distances of every member pair on the common grid.

    Building the table once makes the distance matrix for any ``s`` a single
    weighted maximum.
    """

    def __init__(self, ensemble: Ensemble, cfg: MetricConfig = DEFAULT_METRIC):
        self.ensemble = ensemble
        self.cfg = cfg
        ress = [m.resample(cfg.grid) for m in ensemble.members]
        lo = max(j for j, _ in ress)
        hi = min(j + len(X) for j, X in ress)
        if hi <= lo:
            raise WindowError("ensemble members have no common window")
        self.t = np.arange(lo, hi) * cfg.grid
        self.states = np.stack([X[lo - j:hi - j] for j, X in ress])
        self.half_width = min(m.half_width for m in ensemble.members)
        n = len(ensemble)
        self.pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
        if self.pairs:
            ii = np.array([p[0] for p in self.pairs])
            kk = np.array([p[1] for p in self.pairs])
            self.D = np.minimum(np.linalg.norm(self.states[ii] - self.states[kk], axis=2), cfg.cap)
        else:
            self.D = np.zeros((0, len(self.t)))

    @property
    def trunc_bound(self) -> float:
        return 2.0 ** -self.half_width

    def matrix(self, s: Optional[float] = None) -> np.ndarray:
        """``nu`` (``s`` None) or ``nu_s`` for every pair, as a symmetric
        matrix with zero diagonal."""
        n = len(self.ensemble)
        if s is None:
            w = np.exp2(-np.abs(self.t))
        else:
            if s < 0 or s >= self.half_width:
                raise WindowError(f"shift range {s} exhausts the stored window")
            w = orbit_weights(self.t, s, self.cfg.grid)
        M = np.zeros((n, n))
        if self.pairs:
            vals = np.max(self.D * w, axis=1)
            for (i, k), v in zip(self.pairs, vals):
                M[i, k] = M[k, i] = v
        return M


def distance_matrix(ensemble: Ensemble, s: Optional[float] = None,
                    cfg: MetricConfig = DEFAULT_METRIC) -> np.ndarray:
    return PairwiseTable(ensemble, cfg).matrix(s)


def decision_cutoff(eps: float) -> float:
    """Beyond ``|t| > log2(1/eps)`` a weighted term is below ``eps``, so it
    cannot decide whether ``nu >= eps``."""
    return math.log2(1.0 / eps) if eps < 1 else 0.0


def shifted_below(x: SolutionWindow, y: SolutionWindow, shifts: np.ndarray, eps: float,
                  cfg: MetricConfig = DEFAULT_METRIC) -> np.ndarray:
    """For each grid shift ``t`` in ``shifts`` decide ``nu(T_t x, y) < eps``.

    Only grid points within the decision cutoff are evaluated, which leaves
    the decision unchanged.  Shifts whose cutoff window leaves ``x``'s stored
    window are reported False.
    """
    g = cfg.grid
    jc = int(math.floor(decision_cutoff(eps) / g + 1e-9))
    J = np.arange(-jc, jc + 1)
    jx, X = x.resample(g)
    jy, Y = y.resample(g)
    iy = J - jy
    if iy[0] < 0 or iy[-1] >= len(Y):
        raise WindowError("target solution does not cover the decision window")
    k = np.rint(np.asarray(shifts) / g).astype(int)
    ix = k[:, None] + J[None, :] - jx
    valid = (ix[:, 0] >= 0) & (ix[:, -1] < len(X))
    out = np.zeros(len(k), dtype=bool)
    if np.any(valid):
        d = np.minimum(np.linalg.norm(X[ix[valid]] - Y[iy][None, :, :], axis=2), cfg.cap)
        val = np.max(d * np.exp2(-np.abs(J * g))[None, :], axis=1)
        out[valid] = val < eps
    return out
