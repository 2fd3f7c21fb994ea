"""Shared fixtures: the triple-infeed benchmark network and a random
grounded-network factory for property tests."""

from __future__ import annotations

import numpy as np
import pytest

from gscr.network import AcNetwork, Branch, BusSpec
from gscr.strength import ConverterSet

# Benchmark grid: weak bus 1 (grounding susceptance 1.5), stiffer buses 2
# and 3 (grounding susceptance 3), all pairs linked with x = 1/1.5.
Z_LINK = 1.0 / 1.5

# Analytic smallest eigenvalue of the benchmark's J_eq at P = (1, 1, 1).
LAMBDA1_TRIPLE = (9.0 - 3.0 * np.sqrt(2.0)) / 2.0

TABLE1_ROWS = (
    (1.2444, 1.5, 1.7455),
    (1.1786, 1.5, 1.8056),
    (1.1118, 1.5, 1.8652),
    (1.0439, 1.5, 1.9245),
)


@pytest.fixture
def triple_net() -> AcNetwork:
    return AcNetwork(
        buses=(
            BusSpec("1", thevenin_x=1 / 1.5),
            BusSpec("2", thevenin_x=1 / 3.0),
            BusSpec("3", thevenin_x=1 / 3.0),
        ),
        branches=(
            Branch("1", "2", Z_LINK),
            Branch("1", "3", Z_LINK),
            Branch("2", "3", Z_LINK),
        ),
    )


@pytest.fixture
def triple_conv() -> ConverterSet:
    return ConverterSet(("1", "2", "3"), (1.0, 1.0, 1.0), (1.24, 1.5, 1.75))


@pytest.fixture
def homogeneous_conv() -> ConverterSet:
    return ConverterSet(("1", "2", "3"), (1.0, 1.0, 1.0), (1.5, 1.5, 1.5))


@pytest.fixture
def sidc_net() -> AcNetwork:
    return AcNetwork(buses=(BusSpec("1", thevenin_x=0.5),), branches=())


@pytest.fixture
def sidc_conv() -> ConverterSet:
    return ConverterSet(("1",), (1.0,), (1.5,))


def random_grounded_network(rng: np.random.Generator, n: int) -> AcNetwork:
    """Connected network over n buses with at least one grounded bus.

    A random spanning tree guarantees connectivity; extra branches may
    duplicate pairs (exercising the parallel-merge path).
    """
    ids = tuple(str(i + 1) for i in range(n))
    order = rng.permutation(n)
    branches = []
    for k in range(1, n):
        a = int(order[k])
        b = int(order[rng.integers(0, k)])
        branches.append(Branch(ids[a], ids[b], float(rng.uniform(0.2, 2.0))))
    for _ in range(int(rng.integers(0, n))):
        a, b = rng.choice(n, size=2, replace=False)
        branches.append(Branch(ids[int(a)], ids[int(b)], float(rng.uniform(0.2, 2.0))))
    grounded = set(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
    buses = tuple(
        BusSpec(
            ids[i],
            thevenin_x=float(rng.uniform(0.2, 2.0)) if i in grounded else None,
        )
        for i in range(n)
    )
    return AcNetwork(buses=buses, branches=tuple(branches))


@pytest.fixture
def make_random_network():
    return random_grounded_network
