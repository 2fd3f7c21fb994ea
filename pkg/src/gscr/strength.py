"""Grid strength indices and the stability verdict.

gSCR is the smallest eigenvalue of J_eq = diag(1/P) B and measures the AC
grid strength seen by the converters.  The critical value CgSCR* is the
positive root of lambda^2 - T* lambda - 1 = 0, where T* is the
participation-weighted average of the converter control parameters T_i.
The margin gSCR - CgSCR* and the critical eigenvalue T* + 1/lambda1 -
lambda1 of J_sys = diag(T_i) + J_eq^-1 - J_eq express the same static
voltage stability boundary: the system is stable exactly when the margin
is positive, equivalently when the critical eigenvalue is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateLeadingEigenvalue,
    DimensionMismatch,
    GscrError,
    NonPositiveRatedPower,
    UnknownBus,
)
from .network import AcNetwork, build_susceptance, ensure_all_converters
from .spectral import (
    JeqMatrix,
    PerturbationDiagnostics,
    SpectralData,
    build_jeq,
    eigen_jeq,
    perturbation_diagnostics,
)

__all__ = [
    "ConverterSet",
    "StrengthReport",
    "DEFAULT_MARGIN_TOL",
    "gscr",
    "weighted_t",
    "cgscr_star",
    "jsys_exact",
    "lambda_crit_approx",
    "critical_eigenvalue",
    "analyze",
]

DEFAULT_MARGIN_TOL = 1e-6


@dataclass(frozen=True)
class ConverterSet:
    """Per-bus converter data: rated power P (p.u., > 0) and control
    parameter T (dimensionless)."""

    bus_ids: tuple[str, ...]
    p_rated: tuple[float, ...]
    t_param: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "bus_ids", tuple(self.bus_ids))
        object.__setattr__(self, "p_rated", tuple(float(p) for p in self.p_rated))
        object.__setattr__(self, "t_param", tuple(float(t) for t in self.t_param))
        n = len(self.bus_ids)
        if len(self.p_rated) != n or len(self.t_param) != n:
            raise DimensionMismatch(
                "bus_ids, p_rated and t_param must have the same length"
            )
        if len(set(self.bus_ids)) != n:
            raise DimensionMismatch("converter bus ids must be unique")
        if any(not (math.isfinite(p) and p > 0) for p in self.p_rated):
            raise NonPositiveRatedPower("rated powers must be finite and > 0")
        if any(not math.isfinite(t) for t in self.t_param):
            raise GscrError(
                "control parameters must be finite", code="INVALID_CONTROL_PARAMETER"
            )

    @property
    def n(self) -> int:
        return len(self.bus_ids)

    @property
    def p_array(self) -> np.ndarray:
        return np.array(self.p_rated)

    @property
    def t_array(self) -> np.ndarray:
        return np.array(self.t_param)

    def index_of(self, bus_id: str) -> int:
        try:
            return self.bus_ids.index(bus_id)
        except ValueError:
            raise UnknownBus(f"no converter at bus {bus_id!r}") from None

    def power_of(self, bus_id: str) -> float:
        return self.p_rated[self.index_of(bus_id)]

    def with_power(self, bus_id: str, value: float) -> "ConverterSet":
        """Copy with the rated power of one bus replaced."""
        i = self.index_of(bus_id)
        p = list(self.p_rated)
        p[i] = float(value)
        return replace(self, p_rated=tuple(p))

    def scaled(self, factor: float) -> "ConverterSet":
        """Copy with every rated power multiplied by ``factor``."""
        return replace(self, p_rated=tuple(p * factor for p in self.p_rated))

    def aligned_to(self, bus_ids) -> "ConverterSet":
        """Reorder entries to match ``bus_ids``; the id sets must agree."""
        target = tuple(bus_ids)
        if set(target) != set(self.bus_ids) or len(target) != self.n:
            raise DimensionMismatch(
                f"converter set covers {sorted(self.bus_ids)}, "
                f"expected {sorted(target)}"
            )
        if target == self.bus_ids:
            return self
        order = [self.index_of(b) for b in target]
        return ConverterSet(
            bus_ids=target,
            p_rated=tuple(self.p_rated[i] for i in order),
            t_param=tuple(self.t_param[i] for i in order),
        )


@dataclass(frozen=True)
class StrengthReport:
    """Outcome of a full strength assessment at one operating point."""

    bus_ids: tuple[str, ...]
    gscr: float
    t_star: float
    cgscr_star: float
    margin: float
    lambda_crit_approx: float
    lambda_crit_exact: float
    verdict: str  # "stable" | "marginal" | "unstable"
    diagnostics: PerturbationDiagnostics | None
    eigenvalues: tuple[float, ...]
    weights: tuple[float, ...]
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "bus_ids": list(self.bus_ids),
            "gscr": self.gscr,
            "t_star": self.t_star,
            "cgscr_star": self.cgscr_star,
            "margin": self.margin,
            "lambda_crit_approx": self.lambda_crit_approx,
            "lambda_crit_exact": self.lambda_crit_exact,
            "verdict": self.verdict,
            "eigenvalues": list(self.eigenvalues),
            "weights": list(self.weights),
            "warnings": list(self.warnings),
        }
        if self.diagnostics is None:
            d["diagnostics"] = None
        else:
            d["diagnostics"] = {
                "delta": self.diagnostics.delta,
                "epsilon": self.diagnostics.epsilon,
                "validity": self.diagnostics.validity,
                "radius": self.diagnostics.radius,
                "bound_applicable": self.diagnostics.bound_applicable,
            }
        return d


def gscr(spectral: SpectralData) -> float:
    """The generalized short circuit ratio: smallest eigenvalue of J_eq."""
    return spectral.lambda1


def weighted_t(spectral: SpectralData, conv: ConverterSet) -> float:
    """Participation-weighted control parameter T* = sum_j w_j T_j.

    Homogeneous parameter sets return T exactly, independent of rounding
    in the weights.
    """
    conv = conv.aligned_to(spectral.bus_ids)
    t = conv.t_array
    if np.all(t == t[0]):
        return float(t[0])
    return float(spectral.weights @ t)


def cgscr_star(t_star: float) -> float:
    """Critical ratio: positive root of lambda^2 - T* lambda - 1 = 0."""
    return t_star / 2.0 + math.sqrt(t_star**2 / 4.0 + 1.0)


def jsys_exact(jeq: JeqMatrix, conv: ConverterSet) -> np.ndarray:
    """Assemble diag(T_i) + J_eq^-1 - J_eq.

    The inverse is obtained from linear solves against the identity; the
    determinant of this matrix changing sign marks the exact static
    voltage stability boundary.
    """
    conv = conv.aligned_to(jeq.bus_ids)
    jinv = np.linalg.solve(jeq.entries, np.eye(jeq.n))
    return np.diag(conv.t_array) + jinv - jeq.entries


def lambda_crit_approx(spectral: SpectralData, conv: ConverterSet) -> float:
    """First-order estimate of the critical eigenvalue of J_sys.

    Equals T* + 1/lambda1 - lambda1 and is zero exactly when
    gSCR = CgSCR*(T*).
    """
    if spectral.degenerate:
        raise DegenerateLeadingEigenvalue(
            f"smallest eigenvalue is not simple (gap {spectral.gap:.3e})"
        )
    t_star = weighted_t(spectral, conv)
    lam1 = spectral.lambda1
    return t_star + 1.0 / lam1 - lam1


def critical_eigenvalue(jsys: np.ndarray, reference: float) -> float:
    """Eigenvalue of the assembled J_sys nearest ``reference``.

    J_sys is similar to a symmetric matrix, so its spectrum is real;
    rounding-level imaginary parts from the general eigensolver are
    discarded.
    """
    ev = np.linalg.eigvals(jsys)
    nearest = ev[int(np.argmin(np.abs(ev - reference)))]
    return float(nearest.real)


def _verdict(margin: float, margin_tol: float) -> str:
    if margin > margin_tol:
        return "stable"
    if margin < -margin_tol:
        return "unstable"
    return "marginal"


def _resolve_t_ref(t_ref, t_star: float, conv: ConverterSet) -> float:
    if t_ref == "t_star":
        return t_star
    if t_ref == "mean":
        return float(np.mean(conv.t_array))
    if isinstance(t_ref, (int, float)) and math.isfinite(t_ref):
        return float(t_ref)
    raise GscrError(
        f"t_ref must be 't_star', 'mean' or a finite number, got {t_ref!r}",
        code="INVALID_T_REF",
    )


def analyze(
    net: AcNetwork,
    conv: ConverterSet,
    *,
    margin_tol: float = DEFAULT_MARGIN_TOL,
    t_ref="t_star",
) -> StrengthReport:
    """Full assessment pipeline at one operating point.

    Builds B and J_eq, decomposes, derives gSCR / T* / CgSCR* / margin,
    eigensolves the assembled J_sys for the exact critical eigenvalue and
    attaches the perturbation certificate.  A degenerate smallest
    eigenvalue downgrades the verdict to "marginal" with a warning
    instead of failing.
    """
    ensure_all_converters(net)
    conv = conv.aligned_to(net.bus_ids)

    b = build_susceptance(net)
    jeq = build_jeq(b, conv.p_array)
    spectral = eigen_jeq(jeq)

    g = gscr(spectral)
    t_star = weighted_t(spectral, conv)
    critical = cgscr_star(t_star)
    margin = g - critical
    approx = t_star + 1.0 / g - g

    jsys = jsys_exact(jeq, conv)
    exact = critical_eigenvalue(jsys, approx)

    warnings: list[str] = []
    if spectral.degenerate:
        diagnostics = None
        verdict = "marginal"
        warnings.append(
            f"leading eigenvalue nearly degenerate (gap {spectral.gap:.3e}); "
            "perturbation certificate unavailable, verdict downgraded to marginal"
        )
    else:
        ref = _resolve_t_ref(t_ref, t_star, conv)
        diagnostics = perturbation_diagnostics(spectral, conv.t_array, ref)
        verdict = _verdict(margin, margin_tol)

    return StrengthReport(
        bus_ids=spectral.bus_ids,
        gscr=g,
        t_star=t_star,
        cgscr_star=critical,
        margin=margin,
        lambda_crit_approx=approx,
        lambda_crit_exact=exact,
        verdict=verdict,
        diagnostics=diagnostics,
        eigenvalues=tuple(float(v) for v in spectral.eigenvalues),
        weights=tuple(float(w) for w in spectral.weights),
        warnings=tuple(warnings),
    )
