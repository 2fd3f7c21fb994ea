"""Reduced AC-grid model at the converter buses.

The grid seen from n converter buses is described by pure series reactances
between buses plus an optional Thevenin grounding reactance per bus (the
lumped equivalent of the grid behind that bus).  Resistances are not
modelled and all quantities are in per unit.

The nodal susceptance matrix B uses the sign convention that makes it
positive definite for any grounded, connected network::

    B[i][i] = 1/x_thev_i + sum_j 1/x_ij      B[i][j] = -1/x_ij   (i != j)

With this convention B is a symmetric Stieltjes matrix: positive diagonal,
non-positive off-diagonals, weakly diagonally dominant with strict
dominance at every grounded bus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DisconnectedFromGround,
    EliminatingConverterBus,
    InvalidNetwork,
    NonPositiveReactance,
    SingularInteriorBlock,
)

__all__ = [
    "Branch",
    "BusSpec",
    "AcNetwork",
    "SusceptanceMatrix",
    "Violation",
    "build_susceptance",
    "kron_reduce",
    "merge_parallel_branches",
    "validate",
]

# Recovered equivalent susceptances below this magnitude are treated as an
# absent branch / absent grounding when rebuilding a reduced network.
_ZERO_SUSCEPTANCE = 1e-12

# Condition-number ceiling for the eliminated block in a Kron reduction.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Branch:
    """Series reactance between two buses, in p.u. (must be > 0)."""

    from_bus: str
    to_bus: str
    x: float

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.from_bus, self.to_bus))


@dataclass(frozen=True)
class BusSpec:
    """Bus with an optional Thevenin grounding reactance in p.u. (> 0).

    ``is_converter`` marks buses that carry an HVDC converter; buses
    without one must be eliminated (see :func:`kron_reduce`) before any
    strength analysis.
    """

    id: str
    thevenin_x: float | None = None
    is_converter: bool = True


@dataclass(frozen=True)
class AcNetwork:
    """Ordered bus list plus branch list; the data behind B."""

    buses: tuple[BusSpec, ...]
    branches: tuple[Branch, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def bus_ids(self) -> tuple[str, ...]:
        return tuple(bus.id for bus in self.buses)

    @property
    def converter_ids(self) -> tuple[str, ...]:
        return tuple(bus.id for bus in self.buses if bus.is_converter)

    def bus(self, bus_id: str) -> BusSpec:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise InvalidNetwork(f"unknown bus id {bus_id!r}")

    def canonicalized(self) -> "AcNetwork":
        """Return an equivalent network with parallel branches merged."""
        return replace(self, branches=merge_parallel_branches(self.branches))


@dataclass(frozen=True)
class SusceptanceMatrix:
    """Nodal susceptance matrix over an ordered set of buses (p.u.)."""

    bus_ids: tuple[str, ...]
    entries: np.ndarray

    @property
    def n(self) -> int:
        return len(self.bus_ids)


@dataclass(frozen=True)
class Violation:
    """One machine-readable model defect found by :func:`validate`."""

    code: str
    message: str


def merge_parallel_branches(branches: Iterable[Branch]) -> tuple[Branch, ...]:
    """Combine parallel branches per unordered bus pair (reciprocal sum).

    The merged branch keeps the orientation of the first occurrence;
    output order follows first occurrence of each pair.
    """
    order: list[tuple[str, str]] = []
    susceptance: dict[frozenset[str], float] = {}
    for br in branches:
        key = br.pair
        if key not in susceptance:
            order.append((br.from_bus, br.to_bus))
            susceptance[key] = 0.0
        # x <= 0 is deferred to validate(); keep the raw reciprocal here.
        susceptance[key] += 1.0 / br.x
    return tuple(
        Branch(a, b, 1.0 / susceptance[frozenset((a, b))]) for a, b in order
    )


def validate(net: AcNetwork) -> list[Violation]:
    """Check every AcNetwork invariant; returns an empty list when valid.

    Never raises and never mutates the input; callers that need an
    exception use the first violation's code.
    """
    out: list[Violation] = []
    if not net.buses:
        return [Violation("EmptyNetwork", "network has no buses")]

    ids = [bus.id for bus in net.buses]
    seen: set[str] = set()
    for bus_id in ids:
        if bus_id in seen:
            out.append(Violation("DuplicateBusId", f"duplicate bus id {bus_id!r}"))
        seen.add(bus_id)

    for bus in net.buses:
        if bus.thevenin_x is not None and not (
            np.isfinite(bus.thevenin_x) and bus.thevenin_x > 0
        ):
            out.append(
                Violation(
                    "NonPositiveReactance",
                    f"bus {bus.id!r}: thevenin_x must be > 0, got {bus.thevenin_x}",
                )
            )

    known = set(ids)
    for br in net.branches:
        if br.from_bus not in known or br.to_bus not in known:
            out.append(
                Violation(
                    "UnknownBusEndpoint",
                    f"branch {br.from_bus!r}-{br.to_bus!r} references an unknown bus",
                )
            )
            continue
        if br.from_bus == br.to_bus:
            out.append(
                Violation("SelfLoopBranch", f"branch at bus {br.from_bus!r} is a self loop")
            )
        if not (np.isfinite(br.x) and br.x > 0):
            out.append(
                Violation(
                    "NonPositiveReactance",
                    f"branch {br.from_bus!r}-{br.to_bus!r}: x must be > 0, got {br.x}",
                )
            )

    out.extend(_ground_connectivity(net))
    return out


def _ground_connectivity(net: AcNetwork) -> list[Violation]:
    """Every connected component must contain at least one grounded bus."""
    index = {bus.id: i for i, bus in enumerate(net.buses)}
    parent = list(range(len(net.buses)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for br in net.branches:
        i = index.get(br.from_bus)
        j = index.get(br.to_bus)
        if i is None or j is None or i == j:
            continue
        parent[find(i)] = find(j)

    grounded_roots = {
        find(i) for i, bus in enumerate(net.buses) if bus.thevenin_x is not None
    }
    floating = [
        bus.id for i, bus in enumerate(net.buses) if find(i) not in grounded_roots
    ]
    if floating:
        return [
            Violation(
                "DisconnectedFromGround",
                "no path to ground from bus(es): " + ", ".join(floating),
            )
        ]
    return []


def ensure_all_converters(net: AcNetwork) -> None:
    """Analysis operations only accept networks where every bus carries a
    converter; anything else must be eliminated with kron_reduce first."""
    non_conv = [bus.id for bus in net.buses if not bus.is_converter]
    if non_conv:
        raise InvalidNetwork(
            "network still contains non-converter bus(es) "
            + ", ".join(non_conv)
            + "; eliminate them with kron_reduce first"
        )


_VIOLATION_EXCEPTIONS = {
    "NonPositiveReactance": NonPositiveReactance,
    "DisconnectedFromGround": DisconnectedFromGround,
}


def raise_first_violation(violations: Sequence[Violation]) -> None:
    """Raise the exception mapped to the first violation, if any."""
    if not violations:
        return
    first = violations[0]
    exc = _VIOLATION_EXCEPTIONS.get(first.code, InvalidNetwork)
    raise exc(first.message)


def build_susceptance(net: AcNetwork) -> SusceptanceMatrix:
    """Assemble the nodal susceptance matrix B for a valid network.

    Off-diagonal entries are written to both mirror positions from the
    same accumulator, so the result is bitwise symmetric; the diagonal is
    accumulated in bus order, so the matrix is deterministic with respect
    to the input ordering.
    """
    raise_first_violation(validate(net))

    n = len(net.buses)
    index = {bus.id: i for i, bus in enumerate(net.buses)}
    entries = np.zeros((n, n))
    for br in net.branches:
        i, j = index[br.from_bus], index[br.to_bus]
        value = entries[i, j] - 1.0 / br.x
        entries[i, j] = value
        entries[j, i] = value
    for i, bus in enumerate(net.buses):
        total = 0.0 if bus.thevenin_x is None else 1.0 / bus.thevenin_x
        for j in range(n):
            if j != i:
                total -= entries[i, j]
        entries[i, i] = total
    entries.setflags(write=False)
    return SusceptanceMatrix(bus_ids=net.bus_ids, entries=entries)


def kron_reduce(net: AcNetwork, keep: Iterable[str]) -> AcNetwork:
    """Eliminate the buses not in ``keep`` by Schur complement on B.

    The returned network is electrically equivalent at the kept buses:
    its susceptance matrix equals B_kk - B_ke B_ee^-1 B_ek.  Equivalent
    branch and grounding reactances are recovered from that reduced
    matrix.  Only non-converter buses may be eliminated.
    """
    keep_set = set(keep)
    known = set(net.bus_ids)
    unknown = keep_set - known
    if unknown:
        raise InvalidNetwork(f"keep set references unknown bus(es): {sorted(unknown)}")
    if not keep_set:
        raise InvalidNetwork("keep set must not be empty")

    eliminated = [bus for bus in net.buses if bus.id not in keep_set]
    offenders = [bus.id for bus in eliminated if bus.is_converter]
    if offenders:
        raise EliminatingConverterBus(
            "cannot eliminate converter bus(es): " + ", ".join(offenders)
        )
    if not eliminated:
        return net

    full = build_susceptance(net)
    k_idx = [i for i, bus in enumerate(net.buses) if bus.id in keep_set]
    e_idx = [i for i, bus in enumerate(net.buses) if bus.id not in keep_set]
    b = full.entries
    b_ee = b[np.ix_(e_idx, e_idx)]
    cond = np.linalg.cond(b_ee)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularInteriorBlock(
            f"eliminated block is numerically singular (cond ~ {cond:.3g})"
        )
    b_ke = b[np.ix_(k_idx, e_idx)]
    reduced = b[np.ix_(k_idx, k_idx)] - b_ke @ np.linalg.solve(b_ee, b_ke.T)
    reduced = 0.5 * (reduced + reduced.T)

    kept_buses = [net.buses[i] for i in k_idx]
    return _network_from_susceptance(kept_buses, reduced)


def _network_from_susceptance(
    buses: Sequence[BusSpec], entries: np.ndarray
) -> AcNetwork:
    """Rebuild branch/grounding reactances from a reduced susceptance matrix."""
    m = len(buses)
    scale = max(np.max(np.abs(entries)), 1.0)
    tol = _ZERO_SUSCEPTANCE * scale

    branches: list[Branch] = []
    for i in range(m):
        for j in range(i + 1, m):
            y = -entries[i, j]
            if abs(y) <= tol:
                continue
            if y < 0:
                # Cannot happen for a Stieltjes B; guards corrupted input.
                raise InvalidNetwork(
                    f"reduction produced a negative equivalent susceptance "
                    f"between {buses[i].id!r} and {buses[j].id!r}"
                )
            branches.append(Branch(buses[i].id, buses[j].id, 1.0 / y))

    new_buses: list[BusSpec] = []
    for i, bus in enumerate(buses):
        g = float(np.sum(entries[i, :]))
        if g < -tol:
            raise InvalidNetwork(
                f"reduction produced a negative grounding susceptance at {bus.id!r}"
            )
        thevenin = 1.0 / g if g > tol else None
        new_buses.append(replace(bus, thevenin_x=thevenin))
    return AcNetwork(buses=tuple(new_buses), branches=tuple(branches))
