import math

import numpy as np
import pytest

from weightcalc.analytic import Jet
from weightcalc.errors import InvalidSpec
from weightcalc.matrices import (
    build_m_alpha, check_matrix_condition, constant_matrix, power_family, r_equivalent)
from weightcalc.sequences import gevrey, gevrey_bar, qgevrey, table
from weightcalc.stability import (
    Justification, Outcome, class_equality_demo, classify, classify_narrow,
    classify_omega, classify_wide, gevrey_closed_form, gevrey_map, triviality_screen)
from weightcalc.weights import check_omega_conditions, closed_form, matrix_from_omega

REGISTRY = [
    closed_form("log_square"),
    closed_form("log_square", q=1.5),
    closed_form("power", p=0.3, normalized=True),
    closed_form("power", p=0.5, normalized=True),
    closed_form("power", p=0.9, normalized=True),
    closed_form("linear_log", normalized=True),
]
STABLE = {Outcome.HOLO_INVERSE, Outcome.COMPOSITION}


def const(beta, n=256):
    return constant_matrix(gevrey_bar(beta, n), (1.0,))


class TestScreen:
    def test_only_constants(self):
        v = triviality_screen(const(0.3), 1.5)
        assert v.verdict is Outcome.TRIVIAL and v.justification is Justification.TRIVIAL_I

    def test_trivial_narrow(self):
        v = triviality_screen(const(-1.5), 0.5)
        assert v.verdict is Outcome.TRIVIAL and v.justification is Justification.TRIVIAL_II

    def test_reduction_directive(self):
        v = triviality_screen(const(-0.5), 0.5)
        assert v.directive == "reduce" and v.justification is Justification.REDUCTION

    def test_growing_rows_pass_through(self):
        assert triviality_screen(const(2.0), 0.5) is None

    def test_mixed_rows(self):
        v = classify(power_family(0.5), 1.2)
        assert v.verdict is Outcome.INCONCLUSIVE
        assert any("MixedRows" in n for n in v.notes)


class TestNarrow:
    def test_gevrey2_stable(self):
        v = classify_narrow(const(2.0), 0.5)
        assert v.verdict is Outcome.COMPOSITION
        for key in ("M_rai", "M_c_omega", "M_dc(M^alpha)", "M_fdb(M^alpha)"):
            assert v.reports[key].witnessed

    def test_gevrey_bar_small_not_stable(self):
        v = classify(const(0.2), 0.5)
        assert v.verdict is Outcome.NOT_STABLE
        assert v.reports["M_rai"].fails

    @pytest.mark.parametrize("q", [1.5, math.e])
    def test_from_omega(self, q):
        v = classify(matrix_from_omega(closed_form("log_square", q=q)), 1.0)
        assert v.verdict is Outcome.COMPOSITION

    def test_reduction_boundary(self):
        v = classify(const(-0.5), 0.5)
        assert v.verdict is Outcome.NOT_STABLE and v.justification is Justification.REDUCTION


class TestWide:
    def test_gevrey2(self):
        assert classify_wide(const(2.0), 1.5).verdict is Outcome.COMPOSITION

    def test_power_family(self):
        assert classify(power_family(3.0), 2.0).verdict is Outcome.COMPOSITION

    def test_qgevrey(self):
        v = classify(constant_matrix(qgevrey(1.5)), 3.0)
        assert v.verdict is Outcome.COMPOSITION

    def test_gamma_gate_failure_is_inconclusive(self):
        # gamma(Gbar^1.2) = 1.2 is not above alpha - 1 = 2
        v = classify_wide(const(1.2), 3.0)
        assert v.verdict is Outcome.INCONCLUSIVE

    def test_not_stable_wide(self):
        v = classify(const(0.7), 1.4)
        assert v.verdict is Outcome.NOT_STABLE
        assert v.reports["M_rai"].fails


class TestInvariance:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("beta", [0.4, 2.0])
    def test_r_equivalent_matrices(self, alpha, beta):
        m1 = constant_matrix(gevrey(beta, 256), (1.0,))
        m2 = const(beta)
        assert r_equivalent(m1, m2).witnessed
        assert classify(m1, alpha).verdict is classify(m2, alpha).verdict

    @pytest.mark.parametrize("alpha", [0.5, 1.5])
    def test_constant_matrix_depends_on_row_only(self, alpha):
        single = classify(const(2.0), alpha).verdict
        tripled = classify(constant_matrix(gevrey_bar(2.0, 256)), alpha).verdict
        assert single is tripled


class TestOmega:
    def test_log_square_narrow(self):
        v = classify_omega(closed_form("log_square", q=1.5), 0.5)
        assert v.verdict is Outcome.COMPOSITION
        assert v.justification is Justification.OMEGA_NARROW

    def test_log_square_wide(self):
        v = classify_omega(closed_form("log_square", q=1.5), 2.0)
        assert v.verdict is Outcome.COMPOSITION
        assert v.reports["gamma_gate"]["sentinel"] == "+inf"

    def test_alpha0_failure(self):
        v = classify_omega(closed_form("linear_log", normalized=True), 1.0)
        assert v.verdict is Outcome.NOT_STABLE and v.reports["alpha0"].fails

    def test_unnormalized_skips_cross_check(self):
        v = classify_omega(closed_form("power", p=0.5), 0.5)
        assert any("cross-check skipped" in n for n in v.notes)

    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    @pytest.mark.parametrize("w", REGISTRY, ids=lambda w: w.label)
    def test_matrix_route_agrees(self, w, alpha):
        direct = classify_omega(w, alpha, cross_check=False)
        via = classify(matrix_from_omega(w), alpha)
        assert (direct.verdict in STABLE) == (via.verdict in STABLE)

    @pytest.mark.parametrize("w", REGISTRY, ids=lambda w: w.label)
    def test_alpha0_matches_rai(self, w):
        a0 = check_omega_conditions(w)["alpha0"].verdict
        rai = check_matrix_condition(matrix_from_omega(w), "rai").verdict
        assert a0 is rai

    def test_rejects_bad_alpha(self):
        with pytest.raises(InvalidSpec):
            classify_omega(REGISTRY[0], 0.0)


class TestGevreyMap:
    @pytest.mark.parametrize("alpha,beta,expected", [
        (0.5, 2.0, Outcome.COMPOSITION),
        (0.5, 0.2, Outcome.NOT_STABLE),
        (1.5, 0.3, Outcome.TRIVIAL),
        (0.5, -1.5, Outcome.TRIVIAL),
        (0.5, -0.5, Outcome.NOT_STABLE),
        (2.0, 1.0, Outcome.TRIVIAL),
        (1.5, 1.0, Outcome.COMPOSITION),
    ])
    def test_closed_form(self, alpha, beta, expected):
        assert gevrey_closed_form(alpha, beta)[0] is expected

    def test_pipeline_agrees_on_coarse_grid(self):
        alphas = np.round(np.linspace(0.1, 3.4, 12), 6)
        betas = np.round(np.linspace(-2, 3, 21), 6)
        cells = gevrey_map(alphas, betas)
        assert len(cells) == 12 * 21
        assert all(c["agree"] for c in cells)
        assert sum(c["pipeline"] == "Inconclusive" for c in cells) == 0

    def test_grid_bounds(self):
        with pytest.raises(InvalidSpec):
            gevrey_map([4.0], [0.0])

    def test_closed_form_only(self):
        cells = gevrey_map([0.5], [2.0], pipeline=False)
        assert "pipeline" not in cells[0]


class TestClassEquality:
    def test_row_of_m_alpha_as_probe(self):
        m = constant_matrix(gevrey(2))
        m_alpha = build_m_alpha(m, 0.5)
        probe = Jet(m_alpha.rows[0].logM, np.ones(65))
        rep = class_equality_demo(m, 0.5, [probe])
        res = rep["probes"][0]
        # the probe equals the row, so h = 1 already gives norm 1
        assert res["M_alpha"]["h"] <= 1.0 and res["M"]["h"] <= 1.0
        assert res["within_factor"] and res["minorant_direction"]
        assert rep["pointwise_domination"]

    def test_perturbed_gevrey2(self):
        rng = np.random.default_rng(12)
        y = gevrey(2).logM + rng.uniform(0, 1.5, 65) * (np.arange(65) > 0)
        m = constant_matrix(table(y))
        probes = [Jet(gevrey(2).logM, np.ones(65)), Jet(gevrey(1.5).logM, np.ones(65))]
        rep = class_equality_demo(m, 0.5, probes)
        for res in rep["probes"]:
            assert res["M"] is not None and res["M_alpha"] is not None
            assert res["minorant_direction"]
