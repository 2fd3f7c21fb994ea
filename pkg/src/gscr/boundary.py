"""Continuation experiments along loading directions.

Power sweeps, exact boundary location by bisection on the sign of
det(J_sys), approximate boundary location by bisection on the margin
gSCR - CgSCR*, iso-gSCR contour tracing in the (P_N1, P_N2) plane and the
inhomogeneity-error study that quantifies how far the approximate
boundary drifts from the exact one as the converter control parameters
spread out.

Bisection is used everywhere instead of Newton iterations: the systems
are tiny (a handful of buses), each trial evaluation costs microseconds,
and sign-based bracketing is robust across the determinant's scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GscrError, NoBracket
from .network import AcNetwork, build_susceptance, ensure_all_converters
from .spectral import build_jeq, eigen_jeq
from .strength import (
    ConverterSet,
    StrengthReport,
    analyze,
    cgscr_star,
    jsys_exact,
    weighted_t,
)

__all__ = [
    "LoadingDirection",
    "SweepSample",
    "SweepResult",
    "BoundaryComparison",
    "ContourPoint",
    "StudyRow",
    "sweep",
    "find_exact_boundary",
    "find_approx_boundary",
    "compare_boundaries",
    "gscr_contour",
    "inhomogeneity_study",
    "margin_profile",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8

# Initial P_N1 bracket for contour tracing, expanded geometrically when the
# root lies outside; the combined expansion/bisection budget per point.
_CONTOUR_BRACKET = (0.01, 10.0)
_ITERATION_BUDGET = 60

# Number of intervals scanned for the first sign change before bisecting.
_SCAN_INTERVALS = 64


@dataclass(frozen=True)
class LoadingDirection:
    """One-parameter loading path through converter-set space.

    ``scaled_bus`` names the bus whose rated power takes the swept value;
    ``None`` sweeps a uniform multiplier applied to every rated power.
    """

    base: ConverterSet
    scaled_bus: str | None
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise GscrError(
                f"loading range must satisfy lo < hi, got [{self.lo}, {self.hi}]",
                code="INVALID_RANGE",
            )
        if self.scaled_bus is not None:
            self.base.index_of(self.scaled_bus)  # raises UnknownBus

    def apply(self, p: float) -> ConverterSet:
        if self.scaled_bus is None:
            return self.base.scaled(p)
        return self.base.with_power(self.scaled_bus, p)


@dataclass(frozen=True)
class SweepSample:
    p: float
    report: StrengthReport | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.report is None


@dataclass(frozen=True)
class SweepResult:
    samples: tuple[SweepSample, ...]
    gscr_strictly_decreasing: bool


@dataclass(frozen=True)
class BoundaryComparison:
    """Exact det-singularity loading vs the gSCR = CgSCR* loading."""

    p_exact: float
    p_approx: float

    @property
    def rel_error(self) -> float:
        return abs(self.p_approx - self.p_exact) / self.p_exact


@dataclass(frozen=True)
class ContourPoint:
    """Solved operating point: at (p_n1, p_n2) the target condition holds.

    ``p_n2`` is the stepped (grid) bus power, ``p_n1`` the solved bus
    power; ``target`` is a gSCR value, "cgscr_star" or "singular".
    """

    p_n2: float
    p_n1: float
    target: float | str


@dataclass(frozen=True)
class StudyRow:
    """One inhomogeneity level and its boundary-approximation error.

    ``max_rel_error`` is the largest relative gap between gSCR and CgSCR*
    evaluated at the exact boundary points, the quantity the critical
    ratio is supposed to predict there.  ``max_p_deviation`` is the
    largest relative deviation of the stepped bus power between the two
    curves at fixed solved-bus power; it measures the same mismatch
    through the (much shallower) loading sensitivity and is reported as a
    secondary diagnostic.
    """

    t_values: tuple[float, ...]
    std_dev: float
    max_rel_error: float
    max_p_deviation: float


class _Evaluator:
    """Shared per-trial evaluations; B is loading-independent and built once."""

    def __init__(self, net: AcNetwork):
        ensure_all_converters(net)
        self.b = build_susceptance(net)
        self.stable_det_sign = (-1.0) ** self.b.n

    def margin(self, conv: ConverterSet) -> float:
        conv = conv.aligned_to(self.b.bus_ids)
        spectral = eigen_jeq(build_jeq(self.b, conv.p_array))
        return spectral.lambda1 - cgscr_star(weighted_t(spectral, conv))

    def gscr(self, conv: ConverterSet) -> float:
        conv = conv.aligned_to(self.b.bus_ids)
        return eigen_jeq(build_jeq(self.b, conv.p_array)).lambda1

    def det_side(self, conv: ConverterSet) -> float:
        """+1 on the stable side of the boundary, -1 beyond it, 0 on it."""
        conv = conv.aligned_to(self.b.bus_ids)
        jsys = jsys_exact(build_jeq(self.b, conv.p_array), conv)
        sign, _ = np.linalg.slogdet(jsys)
        return sign * self.stable_det_sign

    def lambda_max(self, conv: ConverterSet) -> float:
        """Largest eigenvalue of J_sys; crosses zero exactly where det(J_sys)
        first changes sign and, unlike the determinant's sign, stays positive
        past the boundary (an even number of crossings cannot mask it)."""
        conv = conv.aligned_to(self.b.bus_ids)
        jsys = jsys_exact(build_jeq(self.b, conv.p_array), conv)
        return float(np.max(np.linalg.eigvals(jsys).real))


def sweep(net: AcNetwork, direction: LoadingDirection, steps: int) -> SweepResult:
    """Analyze a uniform grid of ``steps`` loadings over the direction's range.

    The first sample must be stable (the sweep starts inside the stable
    region).  Later samples that fail keep their error message and the
    sweep continues.  Whether gSCR decreased strictly at every successful
    step is reported as a flag, not assumed.
    """
    if steps < 2:
        raise GscrError("sweep needs at least 2 steps", code="INVALID_RANGE")
    samples: list[SweepSample] = []
    for p in np.linspace(direction.lo, direction.hi, steps):
        try:
            samples.append(SweepSample(p=float(p), report=analyze(net, direction.apply(p))))
        except GscrError as exc:
            samples.append(SweepSample(p=float(p), report=None, error=f"{exc.code}: {exc}"))

    first = samples[0]
    if first.failed:
        raise GscrError(
            f"sweep start is not analyzable: {first.error}", code="UNSTABLE_START"
        )
    if first.report.verdict != "stable":
        raise GscrError(
            f"sweep must start inside the stable region, got verdict "
            f"{first.report.verdict!r} at P = {first.p}",
            code="UNSTABLE_START",
        )

    gscr_values = [s.report.gscr for s in samples if not s.failed]
    decreasing = all(b < a for a, b in zip(gscr_values, gscr_values[1:]))
    return SweepResult(samples=tuple(samples), gscr_strictly_decreasing=decreasing)


def _scan_first_sign_change(
    fn: Callable[[float], float], lo: float, hi: float
) -> tuple[float, float, float] | None:
    """Locate the earliest sign change of fn on [lo, hi] with a coarse scan.

    Returns (a, b, fn(a)) bracketing the first change, or None.  An exact
    zero at a grid point is returned as a degenerate bracket.
    """
    grid = np.linspace(lo, hi, _SCAN_INTERVALS + 1)
    f_prev = fn(float(grid[0]))
    if f_prev == 0.0:
        return (float(grid[0]), float(grid[0]), 0.0)
    for a, b in zip(grid, grid[1:]):
        f_b = fn(float(b))
        if f_b == 0.0:
            return (float(b), float(b), 0.0)
        if (f_prev > 0) != (f_b > 0):
            return (float(a), float(b), f_prev)
        f_prev = f_b
    return None


def _bisect(
    fn: Callable[[float], float],
    a: float,
    b: float,
    f_a: float,
    tol: float,
) -> float:
    """Shrink a sign-change bracket [a, b] to width <= tol; returns midpoint."""
    if a == b:
        return a
    while b - a > tol:
        mid = 0.5 * (a + b)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_a > 0):
            a, f_a = mid, f_mid
        else:
            b = mid
    return 0.5 * (a + b)


def find_exact_boundary(
    net: AcNetwork, direction: LoadingDirection, *, tol: float = DEFAULT_TOL
) -> float:
    """Loading at which det(J_sys) changes sign, by bisection.

    J_eq is rebuilt at every trial loading.  The range start must lie on
    the stable side; raises NoBracket when no sign change exists in range.
    """
    ev = _Evaluator(net)
    fn = lambda p: ev.det_side(direction.apply(p))
    side_lo = fn(direction.lo)
    if side_lo < 0:
        raise NoBracket(
            f"det(J_sys) at P = {direction.lo} is not on the stable side"
        )
    bracket = _scan_first_sign_change(fn, direction.lo, direction.hi)
    if bracket is None:
        raise NoBracket(
            f"det(J_sys) does not change sign on [{direction.lo}, {direction.hi}]"
        )
    return _bisect(fn, *bracket, tol=tol)


def find_approx_boundary(
    net: AcNetwork, direction: LoadingDirection, *, tol: float = DEFAULT_TOL
) -> float:
    """Loading at which gSCR = CgSCR* (margin crosses zero), by bisection."""
    ev = _Evaluator(net)
    fn = lambda p: ev.margin(direction.apply(p))
    if fn(direction.lo) <= 0:
        raise NoBracket(f"margin at P = {direction.lo} is not positive")
    bracket = _scan_first_sign_change(fn, direction.lo, direction.hi)
    if bracket is None:
        raise NoBracket(
            f"margin does not change sign on [{direction.lo}, {direction.hi}]"
        )
    return _bisect(fn, *bracket, tol=tol)


def compare_boundaries(
    net: AcNetwork, direction: LoadingDirection, *, tol: float = DEFAULT_TOL
) -> BoundaryComparison:
    """Locate both boundaries along one direction and package the gap."""
    return BoundaryComparison(
        p_exact=find_exact_boundary(net, direction, tol=tol),
        p_approx=find_approx_boundary(net, direction, tol=tol),
    )


def margin_profile(
    net: AcNetwork, direction: LoadingDirection, samples: int = 101
) -> list[tuple[float, float, float]]:
    """(loading, margin, largest J_sys eigenvalue) across the range.

    Light-weight sampling used for reporting and figures; no verdicts,
    no failure handling beyond what the evaluations themselves raise.
    """
    ev = _Evaluator(net)
    out = []
    for p in np.linspace(direction.lo, direction.hi, samples):
        conv = direction.apply(float(p))
        out.append((float(p), ev.margin(conv), ev.lambda_max(conv)))
    return out


def _expanding_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    budget: int = _ITERATION_BUDGET,
) -> float:
    """Root of fn (positive at lo side, negative at hi side) with geometric
    bracket expansion; expansion and bisection share one iteration budget."""
    iterations = 0
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    while (f_lo > 0) == (f_hi > 0):
        iterations += 1
        if iterations > budget:
            raise NoBracket(
                f"no sign change after expanding the bracket to [{lo:.4g}, {hi:.4g}]"
            )
        if f_lo < 0:  # root below lo: expand downwards
            lo *= 0.5
            f_lo = fn(lo)
        else:  # root above hi: expand upwards
            hi *= 2.0
            f_hi = fn(hi)
    a, b, f_a = lo, hi, f_lo
    while b - a > tol:
        iterations += 1
        if iterations > budget:
            raise NoBracket(
                f"iteration budget exhausted at bracket width {b - a:.3e}"
            )
        mid = 0.5 * (a + b)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_a > 0):
            a, f_a = mid, f_mid
        else:
            b = mid
    return 0.5 * (a + b)


def gscr_contour(
    net: AcNetwork,
    conv: ConverterSet,
    target: float | str,
    p_n2_grid: Sequence[float],
    *,
    grid_bus: str = "2",
    solve_bus: str = "1",
    tol: float = DEFAULT_TOL,
) -> list[ContourPoint]:
    """Trace the curve where a target condition holds in the power plane.

    For each grid value of the stepped bus power, the solved bus power is
    found by bisection on gSCR - target (numeric target), on the margin
    ("cgscr_star") or on the eigenvalue whose zero crossing is the first
    det(J_sys) sign change ("singular").  Grid points without a bracket
    are skipped with a logged diagnostic.
    """
    ev = _Evaluator(net)
    if isinstance(target, str) and target not in ("singular", "cgscr_star"):
        raise GscrError(
            f"target must be a number, 'cgscr_star' or 'singular', got {target!r}",
            code="INVALID_TARGET",
        )

    def h(conv_at: ConverterSet) -> float:
        if target == "singular":
            return -ev.lambda_max(conv_at)
        if target == "cgscr_star":
            return ev.margin(conv_at)
        return ev.gscr(conv_at) - float(target)

    points: list[ContourPoint] = []
    lo0, hi0 = _CONTOUR_BRACKET
    for p2 in p_n2_grid:
        based = conv.with_power(grid_bus, float(p2))
        fn = lambda p1: h(based.with_power(solve_bus, p1))
        try:
            root = _expanding_root(fn, lo0, hi0, tol)
        except NoBracket as exc:
            logger.warning("contour target %r: skipped P_N2 = %g (%s)", target, p2, exc)
            continue
        points.append(ContourPoint(p_n2=float(p2), p_n1=root, target=target))
    return points


def inhomogeneity_study(
    net: AcNetwork,
    t_rows: Sequence[Sequence[float]],
    *,
    p_grid: Sequence[float] | None = None,
    grid_bus: str = "2",
    solve_bus: str = "1",
    tol: float = DEFAULT_TOL,
) -> list[StudyRow]:
    """Boundary-approximation error as the control parameters spread out.

    For each row of control parameters (all rated powers at 1 p.u.), the
    exact singular boundary is traced over ``p_grid``.  At every boundary
    point the relative gap between gSCR and CgSCR* is evaluated (the
    primary error: how well the critical ratio marks the boundary), and
    the loading where gSCR = CgSCR* along the stepped bus at frozen
    solved-bus power gives the secondary coordinate deviation.  Each row
    carries its sample standard deviation (n - 1 divisor).
    """
    ensure_all_converters(net)
    bus_ids = net.bus_ids
    if p_grid is None:
        p_grid = np.linspace(1.0, 1.4, 21)
    ev = _Evaluator(net)

    rows: list[StudyRow] = []
    for t_row in t_rows:
        t_row = tuple(float(t) for t in t_row)
        if len(t_row) != len(bus_ids):
            raise GscrError(
                f"control-parameter row {t_row} does not match the "
                f"{len(bus_ids)}-bus network",
                code="INVALID_ROW",
            )
        conv = ConverterSet(
            bus_ids=bus_ids, p_rated=(1.0,) * len(bus_ids), t_param=t_row
        )
        exact_points = gscr_contour(
            net, conv, "singular", p_grid, grid_bus=grid_bus,
            solve_bus=solve_bus, tol=tol,
        )
        if not exact_points:
            raise NoBracket(
                f"no exact boundary point found for control parameters {t_row}"
            )
        value_gaps = []
        p_deviations = []
        for point in exact_points:
            at_boundary = conv.with_power(solve_bus, point.p_n1).with_power(
                grid_bus, point.p_n2
            )
            at_boundary = at_boundary.aligned_to(ev.b.bus_ids)
            spectral = eigen_jeq(build_jeq(ev.b, at_boundary.p_array))
            g = spectral.lambda1
            c = cgscr_star(weighted_t(spectral, at_boundary))
            value_gaps.append(abs(g - c) / c)

            frozen = conv.with_power(solve_bus, point.p_n1)
            fn = lambda p2: ev.margin(frozen.with_power(grid_bus, p2))
            approx_p2 = _expanding_root(
                fn, 0.5 * point.p_n2, 1.5 * point.p_n2, tol
            )
            p_deviations.append(abs(approx_p2 - point.p_n2) / point.p_n2)
        rows.append(
            StudyRow(
                t_values=t_row,
                std_dev=float(np.std(t_row, ddof=1)),
                max_rel_error=float(max(value_gaps)),
                max_p_deviation=float(max(p_deviations)),
            )
        )
    return rows
