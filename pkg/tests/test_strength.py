"""gSCR, T*, CgSCR*, the assembled J_sys and the assessment pipeline."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import LAMBDA1_TRIPLE

from gscr.errors import (
    DegenerateLeadingEigenvalue,
    DimensionMismatch,
    InvalidNetwork,
    NonPositiveRatedPower,
    UnknownBus,
)
from gscr.network import AcNetwork, BusSpec, build_susceptance
from gscr.spectral import build_jeq, eigen_jeq
from gscr.strength import (
    ConverterSet,
    analyze,
    cgscr_star,
    critical_eigenvalue,
    gscr,
    jsys_exact,
    lambda_crit_approx,
    weighted_t,
)


def _spectral(net, conv):
    return eigen_jeq(build_jeq(build_susceptance(net), conv.p_array))


class TestConverterSet:
    def test_with_power_and_scaled(self, triple_conv):
        assert triple_conv.with_power("2", 1.3).p_rated == (1.0, 1.3, 1.0)
        assert triple_conv.scaled(2.0).p_rated == (2.0, 2.0, 2.0)
        with pytest.raises(UnknownBus):
            triple_conv.with_power("9", 1.0)

    def test_aligned_to_reorders(self, triple_conv):
        aligned = triple_conv.aligned_to(("3", "1", "2"))
        assert aligned.t_param == (1.75, 1.24, 1.5)
        with pytest.raises(DimensionMismatch):
            triple_conv.aligned_to(("1", "2"))

    def test_rejects_bad_values(self):
        with pytest.raises(NonPositiveRatedPower):
            ConverterSet(("1",), (0.0,), (1.5,))
        with pytest.raises(Exception):
            ConverterSet(("1",), (1.0,), (float("nan"),))


class TestGscr:
    def test_benchmark(self, triple_net, triple_conv):
        assert gscr(_spectral(triple_net, triple_conv)) == pytest.approx(
            LAMBDA1_TRIPLE, abs=1e-12
        )

    def test_single_infeed_equals_classical_scr(self, sidc_net, sidc_conv):
        # SCR = 1 / (P x): x = 0.5, P = 1 gives 2
        assert gscr(_spectral(sidc_net, sidc_conv)) == pytest.approx(2.0, abs=1e-12)

    def test_uniform_power_scaling_halves(self, triple_net, triple_conv):
        g1 = gscr(_spectral(triple_net, triple_conv))
        g2 = gscr(_spectral(triple_net, triple_conv.scaled(2.0)))
        assert g2 == pytest.approx(g1 / 2.0, abs=1e-12)


class TestWeightedT:
    def test_benchmark(self, triple_net, triple_conv):
        t_star = weighted_t(_spectral(triple_net, triple_conv), triple_conv)
        assert t_star == pytest.approx(1.4325, abs=1e-9)

    def test_homogeneous_is_exact(self, triple_net, homogeneous_conv):
        assert weighted_t(_spectral(triple_net, homogeneous_conv), homogeneous_conv) == 1.5

    def test_single_bus(self, sidc_net):
        conv = ConverterSet(("1",), (1.0,), (1.24,))
        assert weighted_t(_spectral(sidc_net, conv), conv) == 1.24


class TestCgscrStar:
    def test_benchmark_parameter_gives_two(self):
        assert abs(cgscr_star(1.5) - 2.0) <= 1e-12

    def test_zero_parameter(self):
        assert cgscr_star(0.0) == 1.0

    def test_is_positive_quadratic_root(self):
        for t_star in (0.0, 0.7, 1.4325, 3.3, 5.0):
            c = cgscr_star(t_star)
            assert c > 0
            assert abs(c**2 - t_star * c - 1.0) < 1e-12
        # independent oracle for the derived value
        roots = np.roots([1.0, -1.4325, -1.0])
        positive = roots[roots > 0][0]
        assert cgscr_star(1.4325) == pytest.approx(positive, abs=1e-12)
        assert cgscr_star(1.4325) == pytest.approx(1.94630, abs=1e-4)

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 5.0, 101)
        values = [cgscr_star(t) for t in grid]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestJsysExact:
    def test_homogeneous_eigenvalues_in_closed_form(self, triple_net, homogeneous_conv):
        jeq = build_jeq(build_susceptance(triple_net), homogeneous_conv.p_array)
        jsys = jsys_exact(jeq, homogeneous_conv)
        lam = np.linalg.eigvalsh(build_susceptance(triple_net).entries)
        expected = np.sort(1.5 + 1.0 / lam - lam)
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvals(jsys).real), expected, atol=1e-9
        )

    def test_single_infeed_boundary_is_zero(self, sidc_net, sidc_conv):
        jeq = build_jeq(build_susceptance(sidc_net), sidc_conv.p_array)
        jsys = jsys_exact(jeq, sidc_conv)
        assert jsys[0, 0] == 0.0

    def test_benchmark_critical_eigenvalue(self, triple_net, triple_conv):
        jeq = build_jeq(build_susceptance(triple_net), triple_conv.p_array)
        approx = lambda_crit_approx(_spectral(triple_net, triple_conv), triple_conv)
        exact = critical_eigenvalue(jsys_exact(jeq, triple_conv), approx)

        # independent route: explicit inverse, full spectrum
        b = build_susceptance(triple_net).entries
        jsys_oracle = np.diag(triple_conv.t_array) + np.linalg.inv(b) - b
        oracle = np.max(np.linalg.eigvals(jsys_oracle).real)
        assert exact == pytest.approx(oracle, abs=1e-9)
        assert exact == pytest.approx(-0.5159578583, abs=1e-9)


class TestLambdaCritApprox:
    def test_boundary_zero_cases(self, triple_net):
        # lambda1 = 2 with T* = 1.5 sits exactly on the boundary
        conv = ConverterSet(("1",), (1.0,), (1.5,))
        net = AcNetwork(buses=(BusSpec("1", thevenin_x=0.5),))
        assert lambda_crit_approx(_spectral(net, conv), conv) == 0.0

    def test_benchmark_value(self, triple_net, triple_conv):
        value = lambda_crit_approx(_spectral(triple_net, triple_conv), triple_conv)
        expected = 1.4325 + 1.0 / LAMBDA1_TRIPLE - LAMBDA1_TRIPLE
        assert value == pytest.approx(expected, abs=1e-9)
        assert value == pytest.approx(-0.52578, abs=1e-4)

    def test_degenerate_raises(self):
        net = AcNetwork(
            buses=(BusSpec("1", thevenin_x=0.5), BusSpec("2", thevenin_x=0.5)),
        )
        conv = ConverterSet(("1", "2"), (1.0, 1.0), (1.5, 1.6))
        with pytest.raises(DegenerateLeadingEigenvalue):
            lambda_crit_approx(_spectral(net, conv), conv)


class TestAnalyze:
    def test_benchmark_report(self, triple_net, triple_conv):
        report = analyze(triple_net, triple_conv)
        assert report.gscr == pytest.approx(2.37868, abs=1e-4)
        assert report.t_star == pytest.approx(1.4325, abs=1e-4)
        assert report.cgscr_star == pytest.approx(1.94630, abs=1e-4)
        assert report.margin == pytest.approx(0.43238, abs=1e-4)
        assert report.verdict == "stable"
        assert report.diagnostics is not None
        assert report.diagnostics.bound_applicable
        np.testing.assert_allclose(report.weights, [0.5, 0.25, 0.25], atol=1e-9)

    def test_single_infeed_is_marginal(self, sidc_net, sidc_conv):
        report = analyze(sidc_net, sidc_conv)
        assert report.gscr == pytest.approx(2.0, abs=1e-9)
        assert abs(report.margin) <= 1e-9
        assert report.verdict == "marginal"

    def test_overloaded_bus_is_unstable(self, triple_net, triple_conv):
        report = analyze(triple_net, triple_conv.with_power("2", 2.0))
        assert report.margin < 0
        assert report.verdict == "unstable"

    def test_degenerate_downgrades_to_marginal(self):
        net = AcNetwork(
            buses=(BusSpec("1", thevenin_x=0.5), BusSpec("2", thevenin_x=0.5)),
        )
        conv = ConverterSet(("1", "2"), (1.0, 1.0), (1.5, 1.6))
        report = analyze(net, conv)
        assert report.verdict == "marginal"
        assert report.diagnostics is None
        assert report.warnings

    def test_rejects_passive_bus(self, triple_net, triple_conv):
        with_passive = AcNetwork(
            buses=triple_net.buses[:2]
            + (BusSpec("3", thevenin_x=1 / 3.0, is_converter=False),),
            branches=triple_net.branches,
        )
        conv = ConverterSet(("1", "2"), (1.0, 1.0), (1.24, 1.5))
        with pytest.raises(InvalidNetwork):
            analyze(with_passive, conv)

    def test_rejects_coverage_mismatch(self, triple_net):
        conv = ConverterSet(("1", "2"), (1.0, 1.0), (1.24, 1.5))
        with pytest.raises(DimensionMismatch):
            analyze(triple_net, conv)


class TestInvariants:
    def test_margin_and_critical_eigenvalue_agree(self, make_random_network):
        """margin > 0, lambda_crit_approx < 0 and gSCR > CgSCR* are the
        same statement."""
        rng = np.random.default_rng(31)
        for _ in range(40):
            n = int(rng.integers(1, 7))
            net = make_random_network(rng, n)
            conv = ConverterSet(
                net.bus_ids,
                tuple(rng.uniform(0.3, 3.0, size=n)),
                tuple(rng.uniform(1.0, 2.0, size=n)),
            )
            sp = _spectral(net, conv)
            if sp.degenerate:
                continue
            g = gscr(sp)
            c = cgscr_star(weighted_t(sp, conv))
            approx = lambda_crit_approx(sp, conv)
            assert (g - c > 0) == (approx < 0) == (g > c)

    def test_homogeneous_exactness(self, make_random_network):
        rng = np.random.default_rng(37)
        for _ in range(25):
            n = int(rng.integers(1, 7))
            net = make_random_network(rng, n)
            t = float(rng.uniform(1.0, 2.0))
            conv = ConverterSet(
                net.bus_ids, tuple(rng.uniform(0.3, 3.0, size=n)), (t,) * n
            )
            sp = _spectral(net, conv)
            if sp.degenerate:
                continue
            jeq = build_jeq(build_susceptance(net), conv.p_array)
            approx = lambda_crit_approx(sp, conv)
            exact = critical_eigenvalue(jsys_exact(jeq, conv), approx)
            assert abs(exact - approx) <= 1e-9

    def test_certified_error_bound(self, make_random_network):
        """|exact - approx| <= radius whenever the certificate applies."""
        rng = np.random.default_rng(41)
        checked = 0
        for _ in range(60):
            n = int(rng.integers(2, 7))
            net = make_random_network(rng, n)
            t_mean = float(rng.uniform(1.2, 1.8))
            t = t_mean + rng.uniform(-0.3, 0.3, size=n)
            conv = ConverterSet(
                net.bus_ids, tuple(rng.uniform(0.5, 2.0, size=n)), tuple(t)
            )
            report = analyze(net, conv)
            if report.diagnostics is None or report.diagnostics.validity >= 1.0:
                continue
            gap = abs(report.lambda_crit_exact - report.lambda_crit_approx)
            assert gap <= report.diagnostics.radius
            checked += 1
        assert checked >= 20

    def test_critical_ratio_inverse_identity(self):
        for t_star in np.linspace(0.0, 5.0, 26):
            c = cgscr_star(float(t_star))
            assert abs(t_star + 1.0 / c - c) < 1e-12

    def test_single_infeed_reduction(self):
        rng = np.random.default_rng(43)
        for _ in range(15):
            x = float(rng.uniform(0.2, 2.0))
            p = float(rng.uniform(0.3, 3.0))
            t = float(rng.uniform(1.0, 2.0))
            net = AcNetwork(buses=(BusSpec("1", thevenin_x=x),))
            conv = ConverterSet(("1",), (p,), (t,))
            report = analyze(net, conv)
            assert report.gscr == pytest.approx(1.0 / (p * x), rel=1e-12)
            # boundary sits exactly at the classical critical ratio
            cscr = t / 2.0 + np.sqrt(t**2 / 4.0 + 1.0)
            at_boundary = analyze(net, ConverterSet(("1",), (1.0 / (x * cscr),), (t,)))
            assert abs(at_boundary.margin) <= 1e-9
