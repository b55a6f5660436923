import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weightcalc.errors import InvalidSpec
from weightcalc.reports import Verdict
from weightcalc.sequences import (
    WeightSequence, check_condition, check_fdb, compare, extend, faa_di_bruno_log,
    faa_di_bruno_sequence, from_quotients, gevrey, gevrey_bar, is_log_convex,
    make_sequence, pointwise_product, pointwise_quotient, qgevrey, quotients, table,
    unit_sequence)

import oracles


class TestConstruction:
    def test_gevrey_factorial(self):
        assert gevrey(1, 8).logM[3] == pytest.approx(math.log(6), abs=1e-12)

    def test_qgevrey_square_exponent(self):
        assert qgevrey(math.e, 8).logM[3] == pytest.approx(9.0, abs=1e-12)

    def test_gevrey_bar_zero_is_unit(self):
        assert np.all(gevrey_bar(0, 16).logM == 0)

    def test_generator_matches_formula(self):
        s = gevrey_bar(1.5, 40)
        j = np.arange(1, 41)
        assert np.allclose(s.logM[1:], 1.5 * j * np.log(j), atol=1e-12, rtol=0)

    @pytest.mark.parametrize("spec", [
        {"kind": "qgevrey", "q": 1.0},
        {"kind": "qgevrey", "q": 0.5},
        {"kind": "gevrey", "a": 1, "N": 4},
        {"kind": "table", "logM": [1.0] + [2.0] * 9},
        {"kind": "nonsense"},
    ])
    def test_rejects_bad_specs(self, spec):
        with pytest.raises(InvalidSpec):
            make_sequence(spec)

    def test_make_sequence_product(self):
        s = make_sequence({"kind": "product", "N": 16,
                           "left": {"kind": "gevrey", "a": 1}, "right": {"kind": "gevrey", "a": 1}})
        assert np.allclose(s.logM, gevrey(2, 16).logM)

    def test_extend_reevaluates_generator(self):
        s = extend(gevrey(2, 16), 100)
        assert s.N == 100
        assert s.logM[100] == pytest.approx(2 * math.lgamma(101), rel=1e-13)

    def test_log_m_is_read_only(self):
        s = gevrey(1, 16)
        with pytest.raises(ValueError):
            s.logM[1] = 5.0


class TestQuotients:
    def test_gevrey_quotients(self):
        assert np.allclose(quotients(gevrey(1, 20)), np.log(np.arange(1, 21)))

    def test_qgevrey_quotients(self):
        q = 1.7
        j = np.arange(20)
        assert np.allclose(quotients(qgevrey(q, 20)), (2 * j + 1) * math.log(q))

    def test_small_table(self):
        s = WeightSequence(np.array([0.0, 0.5, 2.0]), "t", None)
        assert np.allclose(quotients(s), [0.5, 1.5])

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(st.lists(st.floats(-5, 5), min_size=8, max_size=40))
    def test_roundtrip(self, q):
        back = quotients(WeightSequence(from_quotients(q), "t", None))
        assert np.allclose(back, q, atol=1e-12, rtol=0)


class TestConditions:
    def test_lc_gevrey2_exact(self):
        assert check_condition(gevrey(2), "lc").verdict is Verdict.WITNESSED

    def test_lc_fails_with_site(self):
        rep = check_condition(table([0, 2, 1, 3, 4, 5, 6, 7, 8]), "lc")
        assert rep.fails and rep.failure_site is not None

    def test_normalized(self):
        assert check_condition(gevrey(1), "normalized").witnessed
        assert check_condition(table([0, -0.5, 0, 1, 2, 3, 4, 5, 6]), "normalized").fails

    def test_rai_gevrey2_witnessed_flat(self):
        rep = check_condition(gevrey(2), "rai")
        assert rep.witnessed
        assert rep.witness["ln_H"] <= 1e-9

    def test_rai_gevrey_half_fails_matching_brute_force(self):
        s = gevrey(0.5, 64)
        rep = check_condition(s, "rai")
        assert rep.fails
        brute = oracles.rai_log_h(s.log_check, 64)
        assert rep.trace[-1][1] == pytest.approx(brute, abs=1e-12)
        # the half-log-factorial closed form
        assert brute == pytest.approx(math.lgamma(65) / 128, abs=1e-12)

    @pytest.mark.parametrize("seq", [gevrey(1), gevrey(2), qgevrey(1.3), gevrey_bar(0.7)])
    def test_mg_matches_brute_force(self, seq):
        rep = check_condition(seq, "mg")
        for J, val in rep.trace:
            assert val == pytest.approx(oracles.mg_log_c(seq.logM, J), abs=1e-12)

    def test_mg_gevrey_witnessed_qgevrey_fails(self):
        assert check_condition(gevrey(2), "mg").witnessed
        assert check_condition(qgevrey(1.5), "mg").fails

    def test_dc_witness_reproduces_inequality(self):
        s = gevrey(2)
        rep = check_condition(s, "dc")
        ln_d = rep.witness["ln_D"]
        j = np.arange(s.N)
        assert np.all(s.logM[1:] <= (j + 1) * ln_d + s.logM[:-1] + 1e-12)

    @pytest.mark.parametrize("a", [-1, 1, 2])
    @pytest.mark.parametrize("cond", ["mg", "dc"])
    def test_gevrey_factor_invariance(self, a, cond):
        for base in (gevrey_bar(1.5), qgevrey(1.2)):
            shifted = pointwise_product(base, gevrey(a))
            assert check_condition(base, cond).verdict == check_condition(shifted, cond).verdict

    def test_unknown_condition(self):
        with pytest.raises(InvalidSpec):
            check_condition(gevrey(1), "nope")

    def test_lc_implies_root_monotone(self):
        s = qgevrey(1.4)
        roots = s.logM[1:] / np.arange(1, s.N + 1)
        assert np.all(np.diff(roots) >= -1e-12)
        assert np.all(s.logM[1:] <= np.arange(1, s.N + 1) * quotients(s) + 1e-12)


class TestFaaDiBruno:
    def test_gevrey1_all_ones(self):
        assert np.allclose(faa_di_bruno_sequence(gevrey(1, 32)).logM, 0.0)

    def test_gevrey2_third_term(self):
        assert math.exp(faa_di_bruno_sequence(gevrey(2, 16)).logM[3]) == pytest.approx(6.0)

    def test_first_term_is_square(self):
        s = qgevrey(1.3, 16)
        assert faa_di_bruno_sequence(s).logM[1] == pytest.approx(2 * s.log_check[1])

    def test_dp_equals_enumeration_random(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            a = np.concatenate([[0.0], rng.normal(0, 2, 16)])
            circ, _ = faa_di_bruno_log(a)
            for k in range(1, 13):
                assert circ[k] == pytest.approx(oracles.fdb_circ(a, k), abs=1e-10)

    def test_fdb_verdicts(self):
        assert check_fdb(gevrey(1)).witnessed
        assert check_fdb(gevrey(2)).witnessed
        assert check_fdb(gevrey(0.5)).fails

    def test_rejects_large_n(self):
        with pytest.raises(InvalidSpec):
            faa_di_bruno_sequence(gevrey(1, 600))


class TestCompare:
    @pytest.mark.parametrize("a", [0.5, 1, 2])
    def test_stirling_equivalence(self, a):
        c = compare(gevrey_bar(a), gevrey(a))
        assert c.verdict is Verdict.WITNESSED
        assert abs(c.equiv.witness["ln_B_forward"]) <= 1 * a + 1e-12
        assert abs(c.equiv.witness["ln_B_backward"]) <= 1 * a + 1e-12

    def test_reflexive_zero_constants(self):
        c = compare(qgevrey(1.5), qgevrey(1.5))
        assert c.verdict is Verdict.WITNESSED
        assert c.equiv.witness["ln_B_forward"] == 0.0

    def test_gevrey1_vs_gevrey2(self):
        c = compare(gevrey(1), gevrey(2))
        assert c.forward.witnessed and c.backward.fails

    def test_transitive_on_corpus(self):
        corpus = [gevrey(1), gevrey_bar(1), gevrey(2), gevrey_bar(2), qgevrey(1.2)]
        le = {(i, k): compare(corpus[i], corpus[k]).forward.witnessed
              for i in range(5) for k in range(5)}
        for i in range(5):
            assert le[(i, i)]
            for j in range(5):
                for k in range(5):
                    if le[(i, j)] and le[(j, k)]:
                        assert le[(i, k)]


class TestPointwise:
    def test_product(self):
        assert np.allclose(pointwise_product(gevrey(1), gevrey(1)).logM, gevrey(2).logM)

    def test_quotient_identity(self):
        assert np.allclose(pointwise_quotient(gevrey_bar(0.5), gevrey_bar(0.5)).logM, 0.0)

    def test_mixed_value(self):
        out = pointwise_product(gevrey_bar(-0.5), gevrey(2))
        assert out.logM[4] == pytest.approx(2 * math.log(24) - 2 * math.log(4), abs=1e-12)
        assert out.logM[4] == pytest.approx(3.583, abs=1e-3)

    def test_unit_sequence(self):
        assert is_log_convex(unit_sequence().logM)
