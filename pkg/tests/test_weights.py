import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from modcalc.errors import InvalidWeightError
from modcalc.lattice import SampledField, UniformGrid
from modcalc.weights import (
    SHIPPED_WEIGHTS,
    ExpPower,
    Polynomial,
    Power,
    Product,
    TensorSplit,
    classify_PEs,
    gevrey_derivative_check,
    moderation_constant,
    mollify,
    one,
    weight_compatibility,
    weight_from_json,
)

R_GRID = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)


class TestEvaluate:
    def test_polynomial_zero_is_one(self):
        assert np.all(Polynomial(0.0, 3).evaluate(np.random.default_rng(0).normal(size=(5, 3))) == 1.0)

    def test_exp_power(self):
        assert ExpPower(1, 1, 2).evaluate([2 / math.sqrt(2), 2 / math.sqrt(2)]) == pytest.approx(math.e**2)

    def test_product_composition(self):
        w = Product((Polynomial(2), ExpPower(0.5, 2)))
        assert w.evaluate(1.0) == pytest.approx(2 * math.exp(0.5), rel=1e-15)

    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=10), st.floats(-3, 3), st.floats(-1, 1))
    def test_product_is_exact(self, xs, t, r):
        a, b = Polynomial(t), ExpPower(r, 1.5)
        x = np.array(xs)
        np.testing.assert_allclose((a * b).evaluate(x), a.evaluate(x) * b.evaluate(x), rtol=1e-14)

    def test_tensor_and_power(self):
        w = TensorSplit(Polynomial(1), ExpPower(1, 1))
        assert w.evaluate([0.0, 2.0]) == pytest.approx(math.e**2)
        assert Power(Polynomial(2), -1).evaluate(1.0) == pytest.approx(0.5)

    def test_json_round_trip(self):
        w = TensorSplit(Product((Polynomial(1), ExpPower(0.2, 2))), Power(Polynomial(1), -1))
        assert weight_from_json(w.to_json()) == w

    def test_unknown_form(self):
        with pytest.raises(InvalidWeightError):
            weight_from_json({"form": "bessel"})


class TestModeration:
    def test_trivial(self):
        assert moderation_constant(one(), one()).constant == 1.0

    @pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
    def test_triangle_inequality(self, r):
        assert moderation_constant(ExpPower(r, 1), ExpPower(r, 1)).constant == pytest.approx(1.0)

    def test_polynomial_regression(self):
        rep = moderation_constant(Polynomial(1), Polynomial(1), 8.0, 64)
        assert rep.constant == pytest.approx(1.1519450656638563, rel=1e-12)
        dense = moderation_constant(Polynomial(1), Polynomial(1), 8.0, 512).constant
        assert rep.constant <= dense <= math.sqrt(2)
        assert dense / rep.constant < 1.01

    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.sampled_from(["exp1", "poly2", "exp_half_s2"]))
    def test_monotone_in_r(self, r1, r2, name):
        lo, hi = sorted((r1, r2))
        w = SHIPPED_WEIGHTS[name]
        c_lo = moderation_constant(w, ExpPower(lo, 1.0), 8.0, 32).constant
        c_hi = moderation_constant(w, ExpPower(hi, 1.0), 8.0, 32).constant
        assert c_hi <= c_lo


class TestClassify:
    def test_polynomial_in_every_class(self):
        rep = classify_PEs(Polynomial(3), 1.0, (0.01, 0.05, 0.1, 0.5, 1.0))
        assert rep.verdict == "all"

    def test_exponential_threshold(self):
        rep = classify_PEs(ExpPower(1, 1), 1.0, R_GRID)
        assert rep.smallest_finite_r == 1.0
        assert rep.finite == tuple(r >= 1.0 for r in R_GRID)

    def test_one(self):
        rep = classify_PEs(one(), 1.0, R_GRID)
        assert rep.verdict == "all" and all(c == pytest.approx(1.0) for c in rep.constants)

    @given(st.sampled_from([0.25, 0.5, 1.0, 1.5]), st.sampled_from([1.0, 2.0]))
    def test_threshold_tracks_rate(self, r0, s):
        rep = classify_PEs(ExpPower(r0, s), s, R_GRID)
        k = R_GRID.index(rep.smallest_finite_r)
        assert abs(k - R_GRID.index(r0)) <= 1


class TestMollify:
    def test_one_is_fixed(self):
        _, rep = mollify(one(), 1.0)
        assert 1 - 1e-10 <= rep.ratio_min <= rep.ratio_max <= 1 + 1e-10

    def test_exponential_against_quadrature(self):
        w0, rep = mollify(ExpPower(1, 1), 1.0, c=1.0)
        assert 0.5 <= rep.ratio_min and rep.ratio_max <= 2.0
        for x in np.linspace(-7.5, 7.5, 16):
            val, _ = integrate.quad(lambda y: math.exp(abs(x - y) - y * y) / math.sqrt(math.pi), -30, 30,
                                    points=[x], limit=200)
            # the kink of |x| limits the tabulated convolution to second order in the step
            assert float(w0.evaluate(x)) == pytest.approx(val, rel=1e-4)
            assert 0.5 <= val / math.exp(abs(x)) <= 2.0

    def test_polynomial_ratio(self):
        _, rep = mollify(Polynomial(2), 1.0)
        assert 1.0 <= rep.ratio_min and rep.ratio_max < 1.5

    @pytest.mark.parametrize("name", sorted(SHIPPED_WEIGHTS))
    def test_output_is_smooth(self, name):
        w0, rep = mollify(SHIPPED_WEIGHTS[name], 1.0)
        assert 0.2 <= rep.ratio_min and rep.ratio_max <= 5.0
        assert gevrey_derivative_check(w0, w0, 1.0, 6).passed


class TestGevrey:
    def test_constant(self):
        g = UniformGrid.box(4.0, 64)
        rep = gevrey_derivative_check(SampledField(g, np.ones(64)), one(), 1.0)
        assert rep.passed and rep.C == pytest.approx(1.0) and rep.h == 0.0

    def test_sine(self):
        g = UniformGrid.box(math.pi, 64, centered=False)
        f = SampledField.from_function(g, np.sin)
        rep = gevrey_derivative_check(f, one(), 1.0, 6)
        assert rep.passed
        assert rep.C == pytest.approx(1.0, abs=1e-3)
        assert rep.h <= 1.0 + 1e-6

    def test_gaussian_against_half_gaussian(self):
        f = SampledField.from_function(UniformGrid.box(8.0, 128), lambda x: np.exp(-(x**2)))
        rep = gevrey_derivative_check(f, ExpPower(-0.5, 0.5), 1.0, 6)
        assert rep.passed and math.isfinite(rep.C) and math.isfinite(rep.h)

    def test_order_cap(self):
        with pytest.raises(ValueError):
            gevrey_derivative_check(SampledField(UniformGrid.box(1.0, 8), np.ones(8)), one(), 1.0, 13)


class TestCompatibility:
    def test_trivial(self):
        assert weight_compatibility(one(2), one(2), one(4)).constant == pytest.approx(1.0)

    @pytest.mark.parametrize("r", [0.25, 1.0])
    def test_displayed_construction(self, r):
        s = 2.0
        om, om0 = Polynomial(1, 2), Polynomial(1, 2)
        shift = TensorSplit(one(2), ExpPower(r, s, 2))
        inner = TensorSplit(Power(om0, -1), one(2))
        omega0 = Product((shift, inner))
        rep = weight_compatibility(om * om0, om, omega0, n=1, levels=6)
        assert rep.finite

    def test_unbounded_ratio(self):
        om2 = TensorSplit(ExpPower(1, 1), one(1))
        rep = weight_compatibility(one(2), om2, one(4), levels=6)
        assert not rep.finite
