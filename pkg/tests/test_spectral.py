"""Eigen-decomposition of J_eq and the first-order perturbation machinery."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import LAMBDA1_TRIPLE, random_grounded_network

from gscr.errors import (
    BiorthogonalityBreakdown,
    DegenerateLeadingEigenvalue,
    DimensionMismatch,
    NonPositiveRatedPower,
)
from gscr.network import SusceptanceMatrix, build_susceptance
from gscr.spectral import (
    build_jeq,
    eigen_jeq,
    perturbation_diagnostics,
    perturbed_eigenvalue,
)
from gscr.strength import ConverterSet, jsys_exact, weighted_t


def _matrix(entries, ids=None) -> SusceptanceMatrix:
    entries = np.asarray(entries, dtype=float)
    ids = ids or tuple(str(i + 1) for i in range(entries.shape[0]))
    return SusceptanceMatrix(bus_ids=ids, entries=entries)


class TestBuildJeq:
    def test_unit_powers_identity_scaling(self, triple_net):
        b = build_susceptance(triple_net)
        jeq = build_jeq(b, (1.0, 1.0, 1.0))
        np.testing.assert_array_equal(jeq.entries, b.entries)

    def test_row_scaling(self, triple_net):
        b = build_susceptance(triple_net)
        jeq = build_jeq(b, (2.0, 1.0, 1.0))
        np.testing.assert_allclose(jeq.entries[0], b.entries[0] / 2.0, atol=1e-15)
        np.testing.assert_array_equal(jeq.entries[1:], b.entries[1:])

    def test_rejects_nonpositive_power(self, triple_net):
        b = build_susceptance(triple_net)
        with pytest.raises(NonPositiveRatedPower):
            build_jeq(b, (1.0, 0.0, 1.0))

    def test_rejects_dimension_mismatch(self, triple_net):
        b = build_susceptance(triple_net)
        with pytest.raises(DimensionMismatch):
            build_jeq(b, (1.0, 1.0))

    def test_benchmark_smallest_eigenvalue(self, triple_net):
        jeq = build_jeq(build_susceptance(triple_net), (1.0, 1.0, 1.0))
        lam = np.linalg.eigvalsh(jeq.entries)
        assert lam[0] == pytest.approx(LAMBDA1_TRIPLE, abs=1e-12)


class TestEigenJeq:
    def test_benchmark_modes(self, triple_net):
        jeq = build_jeq(build_susceptance(triple_net), (1.0, 1.0, 1.0))
        sp = eigen_jeq(jeq)
        lam2 = (9.0 + 3.0 * np.sqrt(2.0)) / 2.0
        np.testing.assert_allclose(
            sp.eigenvalues, [LAMBDA1_TRIPLE, lam2, 7.5], atol=1e-9
        )
        np.testing.assert_allclose(sp.weights, [0.5, 0.25, 0.25], atol=1e-12)
        # critical right eigenvector, sign-fixed
        np.testing.assert_allclose(
            sp.right_vectors[:, 0], [np.sqrt(2) / 2, 0.5, 0.5], atol=1e-9
        )
        assert not sp.degenerate
        assert sp.gap == pytest.approx(lam2 - LAMBDA1_TRIPLE, abs=1e-9)

    def test_single_bus(self):
        sp = eigen_jeq(build_jeq(_matrix([[4.0]]), (1.0,)))
        assert sp.lambda1 == 4.0
        assert sp.weights[0] == pytest.approx(1.0)
        assert np.isinf(sp.gap)

    def test_degenerate_flag(self):
        sp = eigen_jeq(build_jeq(_matrix([[2.0, 0.0], [0.0, 2.0]]), (1.0, 1.0)))
        assert sp.degenerate

    def test_random_instances_against_general_eigensolver(self, make_random_network):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 9))
            net = random_grounded_network(rng, n)
            p = rng.uniform(0.5, 2.0, size=n)
            jeq = build_jeq(build_susceptance(net), p)
            sp = eigen_jeq(jeq)

            # spectrum real and positive; agrees with the unsymmetrized route
            reference = np.sort(np.linalg.eigvals(jeq.entries).real)
            np.testing.assert_allclose(
                sp.eigenvalues, reference, rtol=1e-9, atol=1e-9
            )
            assert sp.eigenvalues[0] > 0

            # eigen residual
            scale = np.linalg.norm(jeq.entries)
            for k in range(n):
                residual = jeq.entries @ sp.right_vectors[:, k] - (
                    sp.eigenvalues[k] * sp.right_vectors[:, k]
                )
                assert np.linalg.norm(residual) <= 1e-9 * scale

            # biorthogonality and weights
            gram = sp.left_vectors.T @ sp.right_vectors
            np.testing.assert_allclose(gram, np.eye(n), atol=1e-9)
            assert sp.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert (sp.weights > 0).all()


class TestPerturbedEigenvalue:
    def test_zero_perturbation_is_exact(self):
        a = np.diag([1.0, 3.0])
        triple = (1.0, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert perturbed_eigenvalue(a, np.zeros((2, 2)), triple) == 1.0

    def test_two_by_two_second_order_error(self):
        t = 0.01
        a = np.diag([1.0, 3.0])
        e = np.array([[0.0, t], [t, 0.0]])
        triple = (1.0, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        estimate = perturbed_eigenvalue(a, e, triple)
        assert estimate == 1.0
        exact = 2.0 - np.sqrt(1.0 + t**2)
        error = abs(estimate - exact)
        # closed form: sqrt(1 + t^2) - 1 = t^2/2 + O(t^4)
        assert error == pytest.approx(t**2 / 2, rel=1e-3)

    def test_matches_weighted_parameter_identity(self, triple_net):
        # perturbing the homogeneous system matrix reproduces
        # T* + 1/lambda1 - lambda1, computed with independent arithmetic
        t_row = (1.0439, 1.5, 1.9245)
        t_ref = 1.4895
        conv = ConverterSet(("1", "2", "3"), (1.0, 1.0, 1.0), t_row)
        jeq = build_jeq(build_susceptance(triple_net), conv.p_array)
        sp = eigen_jeq(jeq)

        jsys0 = t_ref * np.eye(3) + np.linalg.inv(jeq.entries) - jeq.entries
        e = np.diag(conv.t_array - t_ref)
        triple = (
            t_ref + 1 / sp.lambda1 - sp.lambda1,
            sp.right_vectors[:, 0],
            sp.left_vectors[:, 0],
        )
        estimate = perturbed_eigenvalue(jsys0, e, triple)
        expected = weighted_t(sp, conv) + 1 / sp.lambda1 - sp.lambda1
        assert estimate == pytest.approx(expected, abs=1e-12)

    def test_orthogonal_pair_raises(self):
        a = np.diag([1.0, 3.0])
        triple = (1.0, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        with pytest.raises(BiorthogonalityBreakdown):
            perturbed_eigenvalue(a, np.zeros((2, 2)), triple)


class TestPerturbationDiagnostics:
    def test_homogeneous_is_trivial(self, triple_net, homogeneous_conv):
        jeq = build_jeq(build_susceptance(triple_net), homogeneous_conv.p_array)
        sp = eigen_jeq(jeq)
        d = perturbation_diagnostics(sp, homogeneous_conv.t_array, 1.5)
        assert d.epsilon == 0.0
        assert d.validity == 0.0
        assert d.radius == 0.0
        assert d.bound_applicable

    def test_fields_are_consistent(self, triple_net, triple_conv):
        jeq = build_jeq(build_susceptance(triple_net), triple_conv.p_array)
        sp = eigen_jeq(jeq)
        t_star = weighted_t(sp, triple_conv)
        d = perturbation_diagnostics(sp, triple_conv.t_array, t_star)

        # delta from the homogeneous spectrum, by independent arithmetic
        f = t_star + 1 / sp.eigenvalues - sp.eigenvalues
        assert d.delta == pytest.approx(np.min(np.abs(f[0] - f[1:])), abs=1e-12)
        # epsilon: unit powers make X and Y orthogonal, so |X| = |Y| = 1
        assert d.epsilon == pytest.approx(np.max(np.abs(triple_conv.t_array - t_star)), abs=1e-9)
        n = sp.n
        assert d.validity == pytest.approx(16 * n * d.epsilon**2 / d.delta**2, abs=1e-12)
        assert d.radius == pytest.approx(4 * n * d.epsilon**2 / d.delta, abs=1e-12)
        assert d.bound_applicable == (d.validity < 1.0)

    def test_degenerate_raises(self):
        sp = eigen_jeq(build_jeq(_matrix([[2.0, 0.0], [0.0, 2.0]]), (1.0, 1.0)))
        with pytest.raises(DegenerateLeadingEigenvalue):
            perturbation_diagnostics(sp, (1.0, 2.0), 1.5)


class TestPerturbationOrder:
    def test_error_is_second_order(self):
        """log-log slope of |estimate - exact| vs |E| is >= 1.9."""
        rng = np.random.default_rng(19)
        scales = np.array([1e-1, 1e-2, 1e-3, 1e-4])
        for _ in range(5):
            lam = np.linspace(1.0, 9.0, 5) + rng.uniform(-0.2, 0.2, 5)
            while True:
                v = rng.normal(size=(5, 5))
                if np.linalg.cond(v) < 50:
                    break
            a = v @ np.diag(lam) @ np.linalg.inv(v)
            k = 2
            x = v[:, k]
            y = np.linalg.inv(v)[k, :]
            e0 = rng.normal(size=(5, 5))
            e0 /= np.linalg.norm(e0, 2)

            errors = []
            for t in scales:
                estimate = perturbed_eigenvalue(a, t * e0, (lam[k], x, y))
                eigs = np.linalg.eigvals(a + t * e0)
                exact = eigs[np.argmin(np.abs(eigs - estimate))]
                errors.append(abs(exact - estimate))
            slope = np.polyfit(np.log(scales), np.log(errors), 1)[0]
            assert slope >= 1.9


class TestGerschgorinCertificate:
    def test_containment_when_premise_holds(self):
        """When 16 n eps^2/delta^2 < 1 the exact critical eigenvalue lies
        within the certified radius of the first-order estimate."""
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(200):
            n = int(rng.integers(2, 7))
            net = random_grounded_network(rng, n)
            p = rng.uniform(0.5, 2.0, size=n)
            jeq = build_jeq(build_susceptance(net), p)
            sp = eigen_jeq(jeq)
            if sp.degenerate:
                continue
            ids = jeq.bus_ids
            t_ref = float(rng.uniform(1.0, 2.0))
            dt = rng.uniform(-0.5, 0.5, size=n)
            conv = ConverterSet(ids, p, tuple(t_ref + dt))
            d = perturbation_diagnostics(sp, conv.t_array, t_ref)
            if d.validity >= 1.0:
                # shrink the spread until the premise holds
                dt *= np.sqrt(0.5 / d.validity)
                conv = ConverterSet(ids, p, tuple(t_ref + dt))
                d = perturbation_diagnostics(sp, conv.t_array, t_ref)
            assert d.validity < 1.0

            estimate = weighted_t(sp, conv) + 1 / sp.lambda1 - sp.lambda1
            eigs = np.linalg.eigvals(jsys_exact(jeq, conv))
            exact = eigs[np.argmin(np.abs(eigs - estimate))].real
            assert abs(exact - estimate) <= d.radius
            checked += 1
        assert checked >= 150
