"""Figure rendering for the report path.

Each experiment gets one static figure written next to its CSV output:
the strength assessment as a spectrum/weights panel, the power sweep as
gSCR and CgSCR* trajectories, the boundary comparison as margin and
critical-eigenvalue profiles with the located roots, the contour family
in the power plane and the inhomogeneity study as error versus spread.

Rendering is headless (Agg) and stateless: every function builds its own
figure, saves to the given path and closes it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .boundary import BoundaryComparison, ContourPoint, StudyRow, SweepResult
from .strength import StrengthReport

__all__ = [
    "render_analysis",
    "render_sweep",
    "render_boundary",
    "render_contours",
    "render_study",
]

_RC = {
    "figure.figsize": (6.8, 4.2),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.framealpha": 0.9,
}


def _save(fig, path) -> None:
    fig.savefig(Path(path))
    plt.close(fig)


def render_analysis(report: StrengthReport, path) -> None:
    """Spectrum of J_eq against the critical ratio, plus participation weights."""
    with plt.rc_context(_RC):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 4.0))

        idx = range(1, len(report.eigenvalues) + 1)
        ax1.stem(idx, report.eigenvalues, basefmt=" ")
        ax1.axhline(report.cgscr_star, color="tab:red", ls="--", lw=1.2,
                    label=f"CgSCR* = {report.cgscr_star:.4f}")
        ax1.axhline(report.gscr, color="tab:green", ls=":", lw=1.2,
                    label=f"gSCR = {report.gscr:.4f}")
        ax1.set_xlabel("mode")
        ax1.set_ylabel("eigenvalue of $J_{eq}$ (p.u.)")
        ax1.set_xticks(list(idx))
        ax1.set_title(f"margin = {report.margin:.4f}  ({report.verdict})")
        ax1.legend()

        ax2.bar([str(b) for b in report.bus_ids], report.weights, color="tab:blue")
        ax2.set_xlabel("bus")
        ax2.set_ylabel("participation weight")
        ax2.set_ylim(0, 1)
        ax2.set_title("critical-mode weights")

        fig.tight_layout()
        _save(fig, path)


def render_sweep(result: SweepResult, path, *, crossing: float | None = None) -> None:
    """gSCR and CgSCR* trajectories over the swept loading."""
    ok = [s for s in result.samples if not s.failed]
    p = [s.p for s in ok]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(p, [s.report.gscr for s in ok], "o-", ms=3, label="gSCR")
        ax.plot(p, [s.report.cgscr_star for s in ok], "s-", ms=3, label="CgSCR*")
        if crossing is not None:
            ax.axvline(crossing, color="tab:red", ls="--", lw=1.2,
                       label=f"gSCR = CgSCR* at P = {crossing:.4f}")
        ax.set_xlabel("swept power (p.u.)")
        ax.set_ylabel("ratio")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def render_boundary(
    profile: Sequence[tuple[float, float, float]],
    comparison: BoundaryComparison,
    path,
) -> None:
    """Margin and largest J_sys eigenvalue profiles with the located roots."""
    p = [row[0] for row in profile]
    margin = [row[1] for row in profile]
    lam_max = [row[2] for row in profile]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(p, margin, label="margin  gSCR - CgSCR*")
        ax.plot(p, lam_max, label="largest eigenvalue of $J_{sys}$")
        ax.axhline(0.0, color="k", lw=0.8)
        ax.axvline(comparison.p_exact, color="tab:red", ls="--", lw=1.2,
                   label=f"exact boundary P = {comparison.p_exact:.6f}")
        ax.axvline(comparison.p_approx, color="tab:green", ls=":", lw=1.4,
                   label=f"approx boundary P = {comparison.p_approx:.6f}")
        ax.set_xlabel("loading (p.u.)")
        ax.set_ylabel("p.u.")
        ax.set_title(f"relative gap {100 * comparison.rel_error:.3f}%")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save(fig, path)


def render_contours(curves: dict[str, list[ContourPoint]], path) -> None:
    """Traced curves in the (solved power, stepped power) plane.

    The singular boundary is drawn as unfilled circles, value targets as
    lines.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, points in curves.items():
            if not points:
                continue
            x = [pt.p_n1 for pt in points]
            y = [pt.p_n2 for pt in points]
            if label == "singular":
                ax.plot(x, y, "o", mfc="none", color="k", label="singular boundary")
            elif label == "cgscr_star":
                ax.plot(x, y, "-", lw=1.6, label="gSCR = CgSCR*")
            else:
                ax.plot(x, y, "--", lw=1.2, label=f"gSCR = {label}")
        ax.set_xlabel("solved bus power (p.u.)")
        ax.set_ylabel("stepped bus power (p.u.)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save(fig, path)


def render_study(rows: Sequence[StudyRow], path) -> None:
    """Boundary-approximation error versus control-parameter spread."""
    std = [r.std_dev for r in rows]
    err = [100 * r.max_rel_error for r in rows]
    dev = [100 * r.max_p_deviation for r in rows]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(std, err, "o-", label="max |gSCR - CgSCR*| / CgSCR* at boundary")
        ax.plot(std, dev, "s--", label="max stepped-power deviation")
        ax.set_xlabel("sample std dev of control parameters")
        ax.set_ylabel("error (%)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save(fig, path)
