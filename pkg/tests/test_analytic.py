import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from weightcalc.analytic import (
    Jet, SectorPoint, admissible_direction, check_characteristic_criteria,
    constant_function, e_alpha_bound_check, e_alpha_derivative, e_alpha_function,
    e_alpha_jet, e_alpha_log_bound, faa_di_bruno_compose, g_alpha_eval, g_alpha_jet,
    gorny_cartan_constants, gorny_cartan_diagnostic, jet_taylor, membership_certificate,
    mittag_leffler, multinomial_mass, r_coefficients, log_r_coefficients,
    transform_eval, transform_jet)
from weightcalc.errors import (
    AdmissibilityFailed, InvalidSpec, NoFiniteH, OutsideSector, ReliabilityExceeded,
    TruncationInsufficient)
from weightcalc.reports import Verdict
from weightcalc.sequences import (
    gevrey, gevrey_bar, pointwise_product, qgevrey, table, unit_sequence)
from weightcalc.weights import log_convex_minorant

import oracles

CORPUS = [gevrey(1), gevrey(2), gevrey_bar(1.5), qgevrey(1.5)]


def e1_closed(z):
    z = complex(z)
    return (cmath.exp(-z) - 1 + z) / z ** 2


def sector_points(alpha, count, rng, r_max=5.0):
    edge = 0.95 * alpha * math.pi / 2
    return [SectorPoint(float(r), float(t))
            for r, t in zip(rng.uniform(0.1, r_max, count), rng.uniform(-edge, edge, count))]


class TestMittagLeffler:
    def test_exponential(self):
        assert mittag_leffler(1, 1, 1) == pytest.approx(math.e, abs=1e-14)

    def test_cosh(self):
        for x in (0.3, 2.0, 4.5):
            assert mittag_leffler(2, 1, x ** 2) == pytest.approx(math.cosh(x), rel=1e-13)

    def test_at_zero(self):
        assert mittag_leffler(1.7, 2.5, 0) == pytest.approx(1 / math.gamma(2.5), rel=1e-15)

    def test_e1_at_one(self):
        assert e_alpha_derivative(1, 0, 1.0) == pytest.approx(math.exp(-1), abs=1e-14)

    def test_e1_closed_form_twenty_points(self):
        rng = np.random.default_rng(0)
        zs = [cmath.rect(r, t) for r, t in zip(rng.uniform(0.05, 5, 20), rng.uniform(-math.pi, math.pi, 20))]
        for z in zs:
            assert abs(e_alpha_derivative(1, 0, z) - e1_closed(z)) <= 1e-10

    def test_radius_guard(self):
        with pytest.raises(ReliabilityExceeded):
            mittag_leffler(1, 1, 100)

    def test_rejects_bad_a(self):
        with pytest.raises(InvalidSpec):
            mittag_leffler(-1, 1, 0.5)


class TestEAlphaJet:
    def test_first_entries(self):
        d = e_alpha_jet(1, 4).derivs.real
        assert d[0] == pytest.approx(0.5, rel=1e-15)
        assert d[1] == pytest.approx(-1 / 6, rel=1e-15)

    def test_exact_fraction_pattern(self):
        d = e_alpha_jet(1, 20).derivs.real
        for n in range(21):
            exact = Fraction((-1) ** n, (n + 1) * (n + 2))
            assert d[n] == pytest.approx(float(exact), rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1])
    def test_series_derivative_matches_jet(self, alpha):
        jet = e_alpha_jet(alpha, 12).derivs.real
        for n in range(13):
            assert e_alpha_derivative(alpha, n, 0.0).real == pytest.approx(jet[n], rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1])
    def test_jet_under_bound(self, alpha):
        jet = e_alpha_jet(alpha, 64)
        for n in range(65):
            assert jet.log_abs[n] <= e_alpha_log_bound(alpha, n) + 1e-12

    def test_rejects_wide_alpha(self):
        with pytest.raises(InvalidSpec):
            e_alpha_jet(1.5)


class TestBoundCheck:
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1])
    def test_sweep(self, alpha):
        rep = e_alpha_bound_check(alpha)
        assert rep["ok"] and rep["max_ratio"] <= 1 + 1e-9
        assert len(rep["samples"]) == 9 * 9

    def test_small_cases(self):
        assert abs(e_alpha_derivative(1, 0, 1.0)) <= 2
        assert abs(e_alpha_derivative(0.3, 0, 0.0)) == pytest.approx(1 / math.gamma(3.7))

    def test_outside_sector(self):
        with pytest.raises(OutsideSector):
            e_alpha_bound_check(0.5, thetas=(0.9 * math.pi,))


class TestG:
    def test_jet(self):
        d = g_alpha_jet(1.5, 3, 10).derivs.real
        for n in range(11):
            assert d[n] == pytest.approx((-1) ** n * math.gamma(2 * n + 1), rel=1e-10)

    def test_value_at_zero(self):
        assert g_alpha_eval(1.5, 2, 0) == pytest.approx(1.0, abs=1e-10)

    def test_first_derivative_at_zero(self):
        assert g_alpha_eval(1.5, 3, 0, n=1) == pytest.approx(-2.0, abs=1e-8)

    def test_spec_point(self):
        z = SectorPoint(2.0, 0.6 * math.pi)
        assert abs(g_alpha_eval(1.5, 2, z) - 1 / (1 + z.z)) <= 1e-9

    def test_closed_form_twenty_points(self):
        pts = sector_points(1.5, 20, np.random.default_rng(1))
        for p in pts:
            assert abs(g_alpha_eval(1.5, 2, p) - 1 / (1 + p.z)) <= 1e-8

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_derivatives_closed_form(self, n):
        for p in sector_points(1.8, 5, np.random.default_rng(n)):
            exact = (-1) ** n * math.factorial(n) / (1 + p.z) ** (n + 1)
            assert abs(g_alpha_eval(1.8, 2, p, n=n) - exact) <= 1e-8 * math.factorial(n)

    def test_direction_admissible(self):
        for theta in np.linspace(-0.7 * math.pi, 0.7 * math.pi, 15):
            phi = admissible_direction(1.5, 2.5, float(theta))
            c = 0.5 * math.pi / (2 * 1.5)
            assert abs(phi) < c and abs(theta - 1.5 * phi) < math.pi / 2

    def test_no_ray(self):
        with pytest.raises(AdmissibilityFailed):
            admissible_direction(1.1, 1.2, 3.0)

    def test_bad_params(self):
        with pytest.raises(InvalidSpec):
            g_alpha_eval(0.5, 2, 1.0)
        with pytest.raises(OutsideSector):
            g_alpha_eval(1.5, 2, SectorPoint(1.0, 0.9 * math.pi))


class TestRCoefficients:
    def test_r0_gevrey1(self):
        r0 = r_coefficients(gevrey(1), 0)[0]
        assert r0 == pytest.approx(oracles.r0_gevrey1_fraction(60), abs=1e-9)
        assert r0 == pytest.approx(1.3203, abs=1e-3)

    @pytest.mark.parametrize("seq", CORPUS)
    def test_matches_forward_sum(self, seq):
        lq = lambda n: float(seq.logM[n + 1] - seq.logM[n])
        lM = lambda n: float(seq.logM[n])
        r = r_coefficients(seq, 10)
        for j in range(11):
            ref = oracles.r_coefficient_exact(lq, lM, j, 60)
            assert r[j] == pytest.approx(ref, rel=1e-9)

    def test_unit_sequence(self):
        assert np.allclose(r_coefficients(unit_sequence(), 8), 2.0, atol=1e-9)

    @pytest.mark.parametrize("seq", CORPUS)
    def test_sandwich(self, seq):
        lr = log_r_coefficients(seq, 32)
        j = np.arange(33)
        assert np.all(seq.logM[:33] - j * math.log(2) <= lr + 1e-9)
        assert np.all(lr <= seq.logM[:33] + math.log(2) + 1e-9)

    def test_short_table_raises(self):
        with pytest.raises(TruncationInsufficient):
            log_r_coefficients(table(gevrey(1, 40).logM), 20)

    def test_rejects_non_lc(self):
        with pytest.raises(InvalidSpec):
            log_r_coefficients(table([0, 2, 1, 3, 4, 5, 6, 7, 8]), 2)


class TestTransform:
    def test_delta_jet(self):
        f = Jet(np.array([0.0] + [-np.inf] * 8), np.ones(9))
        out = transform_jet(f, gevrey(1))
        assert out.derivs[0].real == pytest.approx(r_coefficients(gevrey(1), 0)[0])
        assert np.all(out.derivs[1:] == 0)

    def test_e1_first_derivative(self):
        out = transform_jet(e_alpha_jet(1, 8), gevrey(1))
        r1 = r_coefficients(gevrey(1), 1)[1]
        assert out.derivs[1].real == pytest.approx(-r1 / 6, rel=1e-12)
        assert np.array_equal(np.sign(out.derivs.real), np.sign(e_alpha_jet(1, 8).derivs.real))

    def test_constant_input(self):
        val = transform_eval(constant_function(1.0), gevrey(1), 0.3 + 0.2j)
        assert val.real == pytest.approx(r_coefficients(gevrey(1), 0)[0], abs=1e-9)
        assert val.real <= 2

    def test_two_paths_agree(self):
        via_eval = transform_eval(e_alpha_function(1), gevrey(1), 0.01)
        via_jet = jet_taylor(transform_jet(e_alpha_jet(1, 40), gevrey(1)), 0.01)
        assert abs(via_eval - via_jet) <= 1e-6

    def test_tail_self_consistent(self):
        rng = np.random.default_rng(4)
        seqs = [gevrey(1), gevrey(2), gevrey_bar(1.5), qgevrey(1.2)]
        for _ in range(20):
            seq = seqs[rng.integers(len(seqs))]
            z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) * 1e-3
            f = constant_function(complex(rng.uniform(0.5, 2)))
            val, tail, J = transform_eval(f, seq, z, full_output=True)
            more = transform_eval(f, seq, z, eps=1e-10 / 2 ** 8)
            assert abs(val - more) <= 1e-10

    def test_reliability(self):
        with pytest.raises(ReliabilityExceeded):
            transform_eval(e_alpha_function(1), qgevrey(3.0), 1.0)


class TestCharacteristicCriteria:
    def test_transform_of_e_alpha(self):
        L = log_convex_minorant(pointwise_product(gevrey_bar(0.5, 256), gevrey(1, 256)))
        f = transform_jet(e_alpha_jet(0.5, 256), L)
        target = pointwise_product(gevrey_bar(-0.5, 256), L)
        rep = check_characteristic_criteria(f, target)
        assert rep["condition_1"] == Verdict.WITNESSED.value
        assert "(2) implied by (1)" in rep["implied"]

    def test_ones_against_gevrey2(self):
        f = Jet.from_values(np.ones(65))
        assert check_characteristic_criteria(f, gevrey(2))["condition_1"] == Verdict.FAILS.value

    def test_exact_jet(self):
        f = Jet(gevrey(2).logM, np.ones(65))
        rep = check_characteristic_criteria(f, gevrey(2))
        assert rep["condition_1"] == Verdict.WITNESSED.value
        assert rep["comparison_1"]["equiv"]["witness"]["ln_B_forward"] == 0.0

    def test_zero_derivatives_noted(self):
        vals = np.array([math.exp(v) if j % 2 == 0 else 0.0 for j, v in enumerate(gevrey(1).logM)])
        rep = check_characteristic_criteria(Jet.from_values(vals), gevrey(1))
        assert any("ZeroDerivative" in n for n in rep["notes"])

    def test_bounds_give_condition_2(self):
        rep = check_characteristic_criteria(Jet.from_values(np.ones(65)), gevrey(1),
                                            bounds=np.exp(gevrey(1).logM))
        assert rep["condition_2"] == Verdict.WITNESSED.value
        assert rep["implied"] == ["(3) implied by (2)"]


class TestComposition:
    def test_chain_rule(self):
        g = Jet.from_values([1.0, 3.0, 2.0])
        f = Jet.from_values([0.0, 5.0, 1.0])
        assert faa_di_bruno_compose(g, f, 1).derivs[1] == pytest.approx(15.0)

    def test_exp_of_identity(self):
        g = Jet.from_values(np.full(10, math.e))
        f = Jet.from_values([1.0, 1.0] + [0.0] * 8)
        assert np.allclose(faa_di_bruno_compose(g, f).derivs, math.e)

    def test_random_against_polynomial_composition(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            gd = rng.normal(size=13) + 1j * rng.normal(size=13)
            fd = rng.normal(size=13)
            out = faa_di_bruno_compose(Jet.from_values(gd), Jet.from_values(fd)).derivs
            ref = oracles.compose_taylor(gd, fd, 12)
            assert np.all(np.abs(out - ref) <= 1e-9 * np.maximum(1, np.abs(ref)))

    def test_multinomial_mass(self):
        for n in range(1, 13):
            assert multinomial_mass(n) == oracles.multinomial_mass(n) == 2 ** (n - 1)

    def test_order_cap(self):
        with pytest.raises(InvalidSpec):
            faa_di_bruno_compose(Jet.from_values(np.ones(30)), Jet.from_values(np.ones(30)))


class TestMembership:
    def test_e_alpha(self):
        cert = membership_certificate(e_alpha_jet(0.5, 64), gevrey_bar(-0.5))
        assert math.isfinite(cert.h) and cert.basis == "JetOnly"
        j = np.arange(65)
        assert np.max(e_alpha_jet(0.5, 64).log_abs - j * math.log(cert.h) - gevrey_bar(-0.5).logM) <= math.log(1e6)

    def test_zero_jet(self):
        cert = membership_certificate(Jet(np.full(9, -np.inf), np.ones(9)), gevrey(1))
        assert cert.norm == 0.0 and cert.h == 2.0 ** -10

    def test_factorial_square_vs_gevrey1(self):
        with pytest.raises(NoFiniteH):
            membership_certificate(Jet(gevrey(2).logM, np.ones(65)), gevrey(1))

    def test_sampled_bounds(self):
        cert = membership_certificate(np.exp(gevrey(1).logM), gevrey(1))
        assert cert.basis == "SampledSup"


class TestGornyCartan:
    def test_constants(self):
        assert gorny_cartan_constants(1) == (4.0, 1.0)
        A, q = gorny_cartan_constants(0.5)
        assert A == pytest.approx(8 * math.pi) and q == pytest.approx(2 * math.e * 1.5 / 0.5)

    def test_degenerate_skipped(self):
        rep = gorny_cartan_diagnostic([1.0, 0.0, 0.0, 0.0], 1)
        assert rep["rows"] == [] and len(rep["skipped"]) == 2

    def test_factorial_margins(self):
        C = [math.factorial(n) for n in range(6)]
        rep = gorny_cartan_diagnostic(C, 1, triples=[(0, 1, 2)])
        row = rep["rows"][0]
        # B_n = n! for alpha = 1: log 4 + (log 0! + log 2!) / 2 - log 1!
        assert row["margin"] == pytest.approx(math.log(4) + 0.5 * math.log(2), abs=1e-12)
        assert rep["kind"] == "diagnostic"
