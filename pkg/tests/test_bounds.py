import math
from fractions import Fraction as F

import numpy as np
import pytest

from klab.bounds import (
    HypothesisNotMet,
    TheoremId,
    assess_boundedness,
    assess_gv_rate,
    gruss_bound_t42,
    gv_residual,
    paltanea_bound,
    paltanea_check,
    rate_class_for,
    rate_fit,
    simultaneous_bound_t25,
    uniform_bound_t24,
    voronovskaya_bound_t31,
)
from klab.corpus import builtin_corpus, get_function
from klab.moduli import modulus, sup_norm
from klab.operator_core import KantorovichOp, central_moment_closed, kantorovich_apply, variance_e1


class TestPaltanea:
    def test_interpolating_operator(self):
        # with vanishing moments only the second-order modulus term survives
        assert paltanea_bound(1, 0, 0, get_function("e1"), 0.3, h=0.2) == 0
        exp = get_function("exp")
        assert paltanea_bound(1, 0, 0, exp, 0.3, h=0.2) == modulus(exp, 2, 0.2).value

    @pytest.mark.parametrize("n", [1, 5, 40])
    def test_collapse_for_identity(self, n):
        h = 1 / (2 * (n + 1))
        M1, M2 = central_moment_closed(n, 1, 0.0), central_moment_closed(n, 2, 0.0)
        bound = paltanea_bound(1, M1, M2, get_function("e1"), 0.0, h=h)
        err = abs(kantorovich_apply(KantorovichOp(n), get_function("e1"), 0.0))
        assert bound == pytest.approx(1 / (2 * (n + 1)), abs=1e-15)
        assert err == pytest.approx(bound, abs=1e-15)

    def test_k4_at_one(self):
        M1, M2 = central_moment_closed(4, 1, F(1)), central_moment_closed(4, 2, F(1))
        bound = paltanea_bound(1, M1, M2, get_function("e2"), 1.0, h=0.5)
        assert bound >= 14 / 75

    def test_default_step(self):
        f, x = get_function("e2"), 0.3
        M1, M2 = central_moment_closed(9, 1, x), central_moment_closed(9, 2, x)
        assert paltanea_bound(1, M1, M2, f, x) == paltanea_bound(1, M1, M2, f, x, h=math.sqrt(M2))

    def test_step_outside_range(self):
        with pytest.raises(ValueError):
            paltanea_bound(1, 0.1, 0.5, get_function("e2"), 0.3)
        assert paltanea_bound(1, 0.1, 0.5, get_function("e2"), 0.3, reproduces_linear=True) > 0

    @pytest.mark.parametrize("f", builtin_corpus(), ids=lambda f: f.id)
    def test_dominates_uniform_error(self, f):
        for n in (4, 16, 64, 256):
            pal = paltanea_check(n, f)
            assert pal.passed
            sup_bound = float(pal.note.split("sup_bound=")[1])
            assert sup_bound + 1e-10 >= uniform_bound_t24(n, f).lhs

    def test_needs_n_four(self):
        with pytest.raises(HypothesisNotMet):
            paltanea_check(3, get_function("e1"))


class TestUniform:
    def test_constant(self):
        r = uniform_bound_t24(4, get_function("e0"))
        assert r.lhs == 0 and r.rhs == 0 and r.passed

    def test_square_n4(self):
        r = uniform_bound_t24(4, get_function("e2"))
        assert abs(r.lhs - 14 / 75) <= 1e-10
        assert abs(r.rhs - 3 / 4) <= 1e-10
        assert r.x_worst == 1.0 and r.passed

    def test_abs_half_n100(self):
        r = uniform_bound_t24(100, get_function("abs_half"))
        assert r.rhs == pytest.approx(1 / 20 * 1 / 10 + 9 / 8 * 2 * 0.1, rel=1e-12)
        assert r.passed

    def test_rejects_small_n(self):
        with pytest.raises(HypothesisNotMet):
            uniform_bound_t24(2, get_function("e1"))


class TestSimultaneous:
    @pytest.mark.parametrize("fid", ["e2", "exp", "abs_half"])
    def test_order_zero_reduces(self, fid):
        a = simultaneous_bound_t25(4, 0, get_function(fid))
        b = uniform_bound_t24(4, get_function(fid))
        assert a.lhs == pytest.approx(b.lhs, abs=1e-15)
        assert a.rhs == pytest.approx(b.rhs, abs=1e-15)

    def test_square_first_derivative(self):
        r = simultaneous_bound_t25(16, 1, get_function("e2"))
        assert r.rhs == pytest.approx(0.25, abs=1e-12)
        assert r.passed

    def test_exp_second_derivative(self):
        assert simultaneous_bound_t25(64, 2, get_function("exp")).passed

    def test_missing_derivative(self):
        with pytest.raises(HypothesisNotMet):
            simultaneous_bound_t25(16, 1, get_function("abs_half"))


class TestVoronovskaya:
    @pytest.mark.parametrize("n", [1, 2, 7, 100, 1024])
    def test_identity_equality(self, n):
        r = voronovskaya_bound_t31(n, get_function("e1"))
        assert abs(r.lhs - 1 / (2 * (n + 1))) <= 1e-12
        assert abs(r.rhs - 1 / (2 * (n + 1))) <= 1e-12

    def test_square_n10(self):
        n = 10
        xs = np.linspace(0, 1, 257)
        resid = n * (central_moment_closed(n, 2, xs) + 2 * xs * central_moment_closed(n, 1, xs)) \
            - (2 * xs - 3 * xs ** 2)
        r = voronovskaya_bound_t31(n, get_function("e2"))
        assert r.lhs == pytest.approx(np.max(np.abs(resid)), rel=1e-12)
        assert r.passed

    def test_constant(self):
        r = voronovskaya_bound_t31(5, get_function("e0"))
        assert r.lhs == 0 and r.rhs == 0

    def test_needs_c2(self):
        with pytest.raises(HypothesisNotMet):
            voronovskaya_bound_t31(5, get_function("signed_sq"))


class TestGruss:
    def test_identity_n1(self):
        r = gruss_bound_t42(1, get_function("e1"), get_function("e1"))
        assert abs(r.lhs - 1 / 12) <= 1e-10
        assert abs(r.rhs - 1 / 4) <= 1e-10

    @pytest.mark.parametrize("n", [1, 8, 256])
    def test_identity_matches_variance(self, n):
        r = gruss_bound_t42(n, get_function("e1"), get_function("e1"))
        assert abs(r.lhs - sup_norm(lambda x: variance_e1(n, x))) <= 1e-12

    @pytest.mark.parametrize("gid", ["e3", "exp", "abs_half"])
    def test_constant_factor(self, gid):
        r = gruss_bound_t42(6, get_function("e0"), get_function(gid))
        assert r.lhs == 0 and r.rhs >= 0 and r.passed

    def test_square_exp(self):
        assert gruss_bound_t42(50, get_function("e2"), get_function("exp")).passed


class TestGrussVoronovskaya:
    def test_constant_factor(self):
        assert gv_residual(9, get_function("e0"), get_function("sin")) == 0

    def test_identity_n1(self):
        assert gv_residual(1, get_function("e1"), get_function("e1"), 257) == pytest.approx(1 / 6, abs=1e-12)

    def test_square_decays_at_unit_rate(self):
        e2 = get_function("e2")
        fit = rate_fit([(n, gv_residual(n, e2, e2)) for n in (64, 128, 256, 512)])
        assert abs(fit.slope + 1) <= 0.1

    def test_smooth_pair_rate(self):
        s = get_function("sin")
        fit = rate_fit([(n, gv_residual(n, s, s)) for n in (64, 128, 256, 512, 1024)])
        assert fit.slope <= -0.85

    @pytest.mark.parametrize("fid", ["e2", "e3", "exp"])
    def test_halving(self, fid):
        f = get_function(fid)
        vals = [gv_residual(n, f, f) for n in (64, 128, 256, 512, 1024)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_requires_derivative(self):
        with pytest.raises(HypothesisNotMet):
            gv_residual(4, get_function("abs_half"), get_function("e1"))


class TestRateFit:
    def test_unit_rate(self):
        assert rate_fit([(10, 1 / 10), (100, 1 / 100), (1000, 1 / 1000)]).slope == pytest.approx(-1, abs=1e-12)

    def test_half_rate(self):
        assert rate_fit([(16, 1 / 4), (64, 1 / 8), (256, 1 / 16)]).slope == pytest.approx(-0.5, abs=1e-12)

    def test_drops_numerical_zeros(self):
        fit = rate_fit([(1, 1.0), (2, 0.5), (4, 0.25), (8, 1e-16)])
        assert fit.dropped == ((8, 1e-16),)
        assert len(fit.samples) == 3

    def test_too_few(self):
        with pytest.raises(ValueError):
            rate_fit([(1, 1.0), (2, 0.0), (4, 0.25)])

    def test_classes(self):
        assert rate_class_for(4) == "O(1/n)"
        assert rate_class_for(3) == "O(1/sqrt(n))"
        assert rate_class_for(2) == "o(1)"

    def test_assessment_verdicts(self):
        ns = [64, 128, 256, 512, 1024]
        assert assess_gv_rate([(n, 1 / n) for n in ns], 4).passed
        assert not assess_gv_rate([(n, n ** -0.5) for n in ns], 4).passed
        assert assess_gv_rate([(n, n ** -0.5) for n in ns], 3).passed
        assert not assess_gv_rate([(n, 1.0) for n in ns], 2).passed
        assert assess_boundedness([(n, 2 - n / 2048) for n in ns]).passed
        assert not assess_boundedness([(n, n / 64) for n in ns]).passed

    def test_exact_zero_samples_pass(self):
        ns = [64, 128, 256, 512, 1024]
        assert assess_gv_rate([(n, 0.0) for n in ns], 4).passed


def test_theorem_ids_are_strings():
    assert str(TheoremId.GRUSS_T42) == "GRUSS_T42"
