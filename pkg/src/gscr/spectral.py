"""Eigen-analysis of the weighted susceptance matrix.

J_eq = diag(1/P_i) B is similar to the symmetric positive definite matrix
S = diag(P^-1/2) B diag(P^-1/2), so the decomposition is computed on S.
This route guarantees a real positive spectrum, exactly biorthonormal
left/right eigenvector pairs (mu_i^T nu_k = u_i^T u_k) and participation
weights w_j = u_1j^2 that sum to one by construction.

The module also houses the generic first-order eigenvalue perturbation
estimate y^T (A+E) x / (y^T x) and the Gerschgorin-style certificate for
its error: when 16 n eps^2 / delta^2 < 1 the perturbed eigenvalue lies
within 4 n eps^2 / delta of the estimate, where delta is the spectral
separation of the unperturbed eigenvalue and eps bounds |Y| |E| |X|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BiorthogonalityBreakdown,
    DegenerateLeadingEigenvalue,
    DimensionMismatch,
    InvalidNetwork,
    NonPositiveRatedPower,
)
from .network import SusceptanceMatrix

__all__ = [
    "JeqMatrix",
    "SpectralData",
    "PerturbationDiagnostics",
    "build_jeq",
    "eigen_jeq",
    "perturbed_eigenvalue",
    "perturbation_diagnostics",
]

# A leading eigenvalue closer than this (relative to the largest one) to
# its neighbour is treated as degenerate: the first-order machinery needs
# a simple eigenvalue.
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class JeqMatrix:
    """Weighted susceptance matrix diag(1/P) B with its provenance."""

    entries: np.ndarray
    b: SusceptanceMatrix
    p_rated: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def bus_ids(self) -> tuple[str, ...]:
        return self.b.bus_ids


@dataclass(frozen=True)
class SpectralData:
    """Full eigen-decomposition of a JeqMatrix.

    eigenvalues are ascending; right_vectors / left_vectors hold nu_i and
    mu_i as columns, normalized so mu_i^T nu_i = 1; weights are the
    participation products mu_1j * nu_1j of the smallest eigenvalue.
    """

    bus_ids: tuple[str, ...]
    p_rated: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    weights: np.ndarray
    gap: float
    degenerate: bool

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class PerturbationDiagnostics:
    """Applicability data for the first-order estimate.

    delta:    separation of the critical eigenvalue from the rest of the
              unperturbed spectrum
    epsilon:  computed |X|_2 |E|_2 |Y|_2
    validity: 16 n eps^2 / delta^2 (the estimate is certified when < 1)
    radius:   4 n eps^2 / delta, the certified error disk radius
    """

    delta: float
    epsilon: float
    validity: float
    radius: float

    @property
    def bound_applicable(self) -> bool:
        return self.validity < 1.0


def build_jeq(b: SusceptanceMatrix, p_rated) -> JeqMatrix:
    """Scale each row of B by the corresponding rated power: J = diag(1/P) B."""
    p = np.asarray(p_rated, dtype=float)
    if p.shape != (b.n,):
        raise DimensionMismatch(
            f"rated powers have shape {p.shape}, expected ({b.n},)"
        )
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise NonPositiveRatedPower("all rated powers must be finite and > 0")
    entries = b.entries / p[:, None]
    entries.setflags(write=False)
    p.setflags(write=False)
    return JeqMatrix(entries=entries, b=b, p_rated=p)


def eigen_jeq(j: JeqMatrix) -> SpectralData:
    """Decompose J_eq through its symmetric similarity transform.

    Eigenvector signs are fixed so that the largest-magnitude entry of
    each right eigenvector is positive, which makes the output
    deterministic across runs and platforms.

    A nearly repeated smallest eigenvalue does not raise; it is surfaced
    through the ``degenerate`` flag so callers can downgrade verdicts.
    """
    p = j.p_rated
    s_scale = 1.0 / np.sqrt(p)
    symmetric = j.b.entries * s_scale[:, None] * s_scale[None, :]
    lam, u = np.linalg.eigh(symmetric)
    if lam[0] <= 0:
        raise InvalidNetwork(
            "susceptance matrix is not positive definite; the network is "
            "ungrounded or otherwise invalid"
        )

    nu = u * s_scale[:, None]
    mu = u * np.sqrt(p)[:, None]
    for k in range(j.n):
        pivot = int(np.argmax(np.abs(nu[:, k])))
        if nu[pivot, k] < 0:
            nu[:, k] = -nu[:, k]
            mu[:, k] = -mu[:, k]
            u[:, k] = -u[:, k]

    weights = u[:, 0] ** 2
    if j.n > 1:
        gap = float(lam[1] - lam[0])
        degenerate = gap < DEGENERACY_RTOL * float(lam[-1])
    else:
        gap = np.inf
        degenerate = False

    for arr in (lam, nu, mu, weights):
        arr.setflags(write=False)
    return SpectralData(
        bus_ids=j.bus_ids,
        p_rated=j.p_rated,
        eigenvalues=lam,
        right_vectors=nu,
        left_vectors=mu,
        weights=weights,
        gap=gap,
        degenerate=degenerate,
    )


def perturbed_eigenvalue(a, e, triple) -> float:
    """First-order estimate of the eigenvalue of A + E continuing ``triple``.

    ``triple`` is (lambda, x, y): a simple eigenvalue of A with its right
    and left eigenvectors.  Pure arithmetic, no eigensolve: returns
    y^T (A + E) x / (y^T x); the error is O(|E|^2).
    """
    _lam, x, y = triple
    a = np.asarray(a, dtype=float)
    e = np.asarray(e, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = float(y @ x)
    if abs(denom) < 1e-12 * np.linalg.norm(x) * np.linalg.norm(y):
        raise BiorthogonalityBreakdown(
            "left/right eigenvectors are numerically orthogonal (y^T x ~ 0)"
        )
    return float(y @ (a + e) @ x) / denom


def perturbation_diagnostics(
    spectral: SpectralData, t_values, t_ref: float
) -> PerturbationDiagnostics:
    """Certificate data for perturbing the homogeneous system matrix.

    The unperturbed matrix is T_ref I + J_eq^-1 - J_eq, whose spectrum is
    {T_ref + 1/lam_i - lam_i}; the perturbation is E = diag(T_i - T_ref).
    delta is independent of T_ref (it cancels in the differences); epsilon
    uses the actual eigenvector matrices of the decomposition.
    """
    t = np.asarray(t_values, dtype=float)
    if t.shape != (spectral.n,):
        raise DimensionMismatch(
            f"control parameters have shape {t.shape}, expected ({spectral.n},)"
        )
    if spectral.degenerate:
        raise DegenerateLeadingEigenvalue(
            f"smallest eigenvalue is not simple (gap {spectral.gap:.3e})"
        )

    lam = spectral.eigenvalues
    if spectral.n > 1:
        f = 1.0 / lam - lam
        delta = float(np.min(np.abs(f[0] - f[1:])))
        if delta <= 0.0:
            raise DegenerateLeadingEigenvalue(
                "critical eigenvalue coincides with another mode"
            )
    else:
        delta = np.inf

    e_norm = float(np.max(np.abs(t - t_ref)))
    x_norm = float(np.linalg.norm(spectral.right_vectors, 2))
    y_norm = float(np.linalg.norm(spectral.left_vectors, 2))
    epsilon = x_norm * e_norm * y_norm

    n = spectral.n
    if np.isinf(delta):
        validity = 0.0
        radius = 0.0
    else:
        validity = 16.0 * n * epsilon**2 / delta**2
        radius = 4.0 * n * epsilon**2 / delta
    return PerturbationDiagnostics(
        delta=delta, epsilon=epsilon, validity=validity, radius=radius
    )
