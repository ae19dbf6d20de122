import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modcalc.errors import InvalidWindowError, MemoryGuardError
from modcalc.lattice import SampledField, UniformGrid
from modcalc.stft import Window, gs_seminorm, hermite_function, istft, round_trip_guaranteed, stft, stft_decay_fit
from modcalc.weights import ExpPower, Polynomial, one

from conftest import rel_l2

GRID0 = UniformGrid.box(12.0, 256, centered=False)
SQRT2PI = math.sqrt(2 * math.pi)


def _phi(grid=GRID0):
    return SampledField.from_function(grid, lambda x: np.pi**-0.25 * np.exp(-(x**2) / 2))


def _small_grid():
    return UniformGrid.box(8.0, 64, centered=False)


class TestWindow:
    @pytest.mark.parametrize("n", [0, 1, 2, 4, 7])
    def test_hermite_functions_are_orthonormal(self, n):
        x = np.linspace(-20, 20, 20001)
        h = x[1] - x[0]
        for m in range(n + 1):
            ip = np.sum(hermite_function(n, x) * hermite_function(m, x)) * h
            assert ip == pytest.approx(1.0 if m == n else 0.0, abs=1e-10)

    def test_decay_metadata_finite(self):
        assert math.isfinite(Window.gaussian(1.0).decay_metadata())
        assert math.isfinite(Window.hermite(3, 0.5).decay_metadata())

    def test_zero_table_rejected(self):
        with pytest.raises(InvalidWindowError):
            Window.tabulated(SampledField.zeros(UniformGrid.box(1.0, 8)))

    def test_fourier_of_gaussian(self):
        eta = np.linspace(-3, 3, 7)
        w = Window.gaussian(2.0)
        expect = math.sqrt(2.0) * np.pi**-0.25 * np.exp(-((2.0 * eta) ** 2) / 2)
        assert np.allclose(w.fourier(eta), expect)


class TestSTFT:
    def test_value_at_origin(self):
        S = stft(_phi(), Window.gaussian())
        k = S.field.grid.index_of([[0.0, 0.0]])[0]
        assert abs(S.values[tuple(k)] - 1 / SQRT2PI) < 1e-12

    def test_closed_form_magnitude(self):
        S = stft(_phi(), Window.gaussian())
        P = S.field.grid.points()
        expect = np.exp(-(P[..., 0] ** 2 + P[..., 1] ** 2) / 4) / SQRT2PI
        assert np.max(np.abs(np.abs(S.values) - expect)) < 1e-8

    def test_phase_convention(self):
        # V(x, xi) = (2 pi)^(-1/2) exp(-i x xi / 2) exp(-(x^2 + xi^2)/4) for the unit Gaussian
        S = stft(_phi(), Window.gaussian())
        P = S.field.grid.points()
        expect = np.exp(-0.5j * P[..., 0] * P[..., 1] - (P[..., 0] ** 2 + P[..., 1] ** 2) / 4) / SQRT2PI
        assert np.max(np.abs(S.values - expect)) < 1e-8

    @given(st.integers(-20, 20))
    def test_translation_covariance(self, k):
        g = GRID0
        x0 = k * g.steps[0]
        f = SampledField.from_function(g, lambda x: np.exp(-((x - 1.0) ** 2)))
        fs = SampledField.from_function(g, lambda x: np.exp(-((x - 1.0 - x0) ** 2)))
        a = np.abs(stft(f, Window.gaussian()).values)
        b = np.abs(stft(fs, Window.gaussian()).values)
        inner = slice(40, 216)
        assert np.max(np.abs(b[inner] - np.roll(a, k, axis=0)[inner])) < 1e-10

    @given(st.integers(-15, 15))
    def test_modulation_covariance(self, m):
        g = GRID0
        xi0 = m * g.reciprocal().steps[0]
        f = SampledField.from_function(g, lambda x: np.exp(-(x**2) / 3))
        fm = f.with_values(f.values * np.exp(1j * xi0 * g.axes()[0]))
        a = np.abs(stft(f, Window.gaussian()).values)
        b = np.abs(stft(fm, Window.gaussian()).values)
        inner = slice(40, 216)
        assert np.max(np.abs(b[:, inner] - np.roll(a, m, axis=1)[:, inner])) < 1e-10

    @given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5), st.integers(0, 999))
    def test_linear_in_signal_conjugate_linear_in_window(self, a, b, seed):
        g = _small_grid()
        rng = np.random.default_rng(seed)
        env = np.exp(-(g.axes()[0] ** 2) / 4)
        f1, f2 = (SampledField(g, env * (rng.normal(size=64) + 1j * rng.normal(size=64))) for _ in range(2))
        t1, t2 = (SampledField(g, env * (rng.normal(size=64) + 1j * rng.normal(size=64))) for _ in range(2))
        w1, w2 = Window.tabulated(t1, normalize=False), Window.tabulated(t2, normalize=False)
        lin = stft(f1.with_values(a * f1.values + b * f2.values), w1).values
        ref = a * stft(f1, w1).values + b * stft(f2, w1).values
        scale = (abs(a) + abs(b) + 1e-3) * np.max(np.abs(stft(f1, w1).values) + np.abs(stft(f2, w1).values))
        assert np.max(np.abs(lin - ref)) <= 1e-12 * scale
        if abs(a) + abs(b) > 1e-3:
            wmix = Window.tabulated(t1.with_values(a * t1.values + b * t2.values), normalize=False)
            conj = stft(f1, wmix).values
            ref = np.conj(a) * stft(f1, w1).values + np.conj(b) * stft(f1, w2).values
            assert np.max(np.abs(conj - ref)) <= 1e-12 * scale

    def test_energy_identity(self, gaussian):
        f = gaussian.with_values(gaussian.values * np.exp(2j * gaussian.grid.axes()[0]))
        S = stft(f, Window.hermite(2, 1.3))
        assert S.field.l2_norm() == pytest.approx(f.l2_norm() * S.window.norm(), rel=1e-8)

    def test_memory_guard(self):
        with pytest.raises(MemoryGuardError):
            stft(SampledField.zeros(UniformGrid.box(12.0, 10000)), Window.gaussian())

    def test_substride_shape(self):
        S = stft(_phi(_small_grid()), Window.gaussian(), stride=4)
        assert S.values.shape == (16, 64)
        assert not round_trip_guaranteed(S, None)


class TestISTFT:
    def test_gaussian_round_trip(self, gaussian):
        S = stft(gaussian, Window.gaussian())
        assert round_trip_guaranteed(S, None)
        assert rel_l2(istft(S).values, gaussian.values) < 1e-8

    def test_hermite4_round_trip(self, grid):
        f = SampledField.from_function(grid, lambda x: hermite_function(4, x))
        S = stft(f, Window.gaussian(0.7))
        assert rel_l2(istft(S).values, f.values) < 1e-8

    def test_zero(self, grid):
        S = stft(SampledField.zeros(grid), Window.gaussian())
        assert not np.any(istft(S).values)


class TestSeminorm:
    def test_zero(self, grid):
        assert gs_seminorm(SampledField.zeros(grid), 1, 1, 1) == 0.0

    def test_decreasing_in_h(self, gaussian):
        vals = [gs_seminorm(gaussian, 1.0, 1.0, h) for h in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(math.isfinite(v) for v in vals)
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        # once the order-zero term dominates the value no longer moves
        assert vals[0] > vals[1] > vals[2]
        assert vals[-1] == pytest.approx(float(np.max(np.abs(gaussian.values))))

    def test_first_hermite_dominates(self, gaussian):
        x = gaussian.grid.axes()[0]
        g1 = gaussian.with_values(x * gaussian.values)
        assert gs_seminorm(g1, 1.0, 1.0, 0.5) > gs_seminorm(gaussian, 1.0, 1.0, 0.5)
        psi1 = gaussian.with_values(math.sqrt(2) * x * gaussian.values)
        assert gs_seminorm(psi1, 1.0, 1.0, 1.0) > gs_seminorm(gaussian, 1.0, 1.0, 1.0)


class TestDecayFit:
    def test_gaussian_rate_positive(self, gaussian):
        fit = stft_decay_fit(stft(gaussian, Window.gaussian()), one(), 1.0)
        assert fit.r > 0

    def test_synthesized_recovery(self):
        ps = UniformGrid.box(10.0, 64).phase_space()
        P = ps.points()
        C, r0 = 2.5, 0.7
        om = Polynomial(1.0)
        vals = C * om.evaluate(P[..., 0]) * np.exp(-r0 * np.abs(P[..., 1]))
        fit = stft_decay_fit(SampledField(ps, vals), om, 1.0)
        assert fit.C == pytest.approx(C, rel=0.01)
        assert fit.r == pytest.approx(r0, rel=0.01)

    def test_constant_lower_bound(self):
        S = stft(_phi(), Window.gaussian())
        om = ExpPower(0.3, 1.0)
        fit = stft_decay_fit(S, om, 1.0)
        assert fit.C >= (1 / SQRT2PI) / float(om.evaluate(0.0)) * (1 - 1e-12)

    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_monotone_in_weight(self, t1, t2):
        S = stft(_phi(_small_grid()), Window.gaussian())
        lo, hi = sorted((t1, t2))
        C = 1.0
        r_lo = stft_decay_fit(S, Polynomial(lo), 1.0, C=C).r
        r_hi = stft_decay_fit(S, Polynomial(hi), 1.0, C=C).r
        assert r_hi >= r_lo - 1e-12
