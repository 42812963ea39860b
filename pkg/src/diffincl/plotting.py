"""SVG figures for the command line reports (presentation only)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import Branch, Region  # noqa: E402
from .solution import SolutionWindow  # noqa: E402

BRANCH_COLORS = {Branch.BRANCH1: "tab:blue", Branch.BRANCH2: "tab:red"}

# fixed id salt and no date stamp keep the SVG text reproducible
plt.rcParams["svg.hashsalt"] = "diffincl"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _draw_region(ax, region: Region):
    pts = np.asarray(region.outline)
    if region.has_interior:
        pts = np.vstack([pts, pts[:1]])
    ax.plot(pts[:, 0], pts[:, 1], color="0.6", lw=1.0, zorder=0)


def phase_portrait(sol: SolutionWindow, path, region: Optional[Region] = None,
                   markers: Optional[list] = None, title: str = "") -> Path:
    """Trajectory in the plane with one colour per branch and the switch
    points marked.  ``markers`` is an optional list of
    ``(point, label)`` pairs drawn on top, e.g. troughs and peaks."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if region is not None:
        _draw_region(ax, region)
    seen = set()
    for seg in sol.segments:
        label = None if seg.branch in seen else f"branch {int(seg.branch)}"
        seen.add(seg.branch)
        ax.plot(seg.x[:, 0], seg.x[:, 1], color=BRANCH_COLORS[seg.branch], lw=1.2, label=label)
    sw = sol.switch_points
    if len(sw) and not markers:
        ax.plot(sw[:, 0], sw[:, 1], "ko", ms=3, label="switch")
    for kind, style in (("trough", "v"), ("peak", "^")):
        pts = np.array([p for p, k in (markers or []) if k == kind]).reshape(-1, 2)
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 1], "k" + style, ms=5, ls="none", label=kind)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title or sol.name)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def spanning_curves(report, path) -> Path:
    """``log2 S`` against ``s`` for every ``eps`` of an entropy report."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for eps in sorted({r["eps"] for r in report.rows}, reverse=True):
        rows = sorted((r for r in report.rows if r["eps"] == eps), key=lambda r: r["s"])
        ax.plot([r["s"] for r in rows], [np.log2(r["S"]) for r in rows], "o-", label=f"eps={eps:g}")
    ax.set_xlabel("s")
    ax.set_ylabel("log2 S")
    ax.set_title(f"{report.ensemble}: spanning numbers ({report.label})")
    ax.legend(fontsize=8)
    return _save(fig, path)
