import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modcalc.errors import InvalidFieldError, SingularBasisError, UnsupportedBasisError
from modcalc.lattice import (
    OrderedBasis,
    QuantizationSpec,
    SampledField,
    UniformGrid,
    fourier_transform,
    inverse_fourier,
    is_phase_split,
    kappa_parallelepiped,
    spectral_derivative,
)

from conftest import rel_l2


def _ft_quad(f, xi):
    """(2 pi)^(-1/2) int f(x) exp(-i x xi) dx by adaptive high-precision quadrature."""
    with mpmath.workdps(30):
        nodes = mpmath.linspace(-16, 16, 65)
        val = mpmath.quad(lambda x: f(x) * mpmath.exp(-1j * x * xi), nodes)
    return complex(val) / math.sqrt(2 * math.pi)


class TestBasis:
    def test_singular_rejected(self):
        with pytest.raises(SingularBasisError):
            OrderedBasis(((1, 0), (2, 0)))

    def test_order_is_kept(self):
        E = OrderedBasis.permuted([1, 0])
        assert E.vectors == ((0.0, 1.0), (1.0, 0.0))
        assert not E.is_identity
        assert E.permutation_to(OrderedBasis.identity(2)) == (1, 0)

    def test_cell_volume_uses_determinant(self):
        g = UniformGrid(OrderedBasis(((2, 0), (1, 1))), (4, 4), (0.5, 0.25), (0, 0))
        assert g.cell_volume == pytest.approx(2 * 0.5 * 0.25)

    def test_quantization_presets(self):
        assert np.array_equal(QuantizationSpec.weyl(2).matrix, 0.5 * np.eye(2))
        assert QuantizationSpec.kohn_nirenberg(3).is_zero


class TestGrid:
    def test_cell_centered_default(self):
        g = UniformGrid.box(1.0, 4)
        assert np.allclose(g.axes()[0], [-0.75, -0.25, 0.25, 0.75])
        assert 0.0 in UniformGrid.box(1.0, 4, centered=False).axes()[0]

    def test_point_formula_sheared(self):
        E = OrderedBasis(((1, 0), (1, 1)))
        g = UniformGrid(E, (3, 2), (0.5, 2.0), (0.1, -1.0))
        p = g.points()[2, 1]
        expect = (0.1 + 2 * 0.5) * np.array([1, 0]) + (-1.0 + 1 * 2.0) * np.array([1, 1])
        assert np.allclose(p, expect)

    @given(st.integers(1, 3), st.integers(2, 7), st.floats(0.5, 5.0))
    def test_index_point_bijection(self, d, n, L):
        g = UniformGrid.box(L, n, d)
        pts = g.points().reshape(-1, d)
        idx = g.index_of(pts)
        expect = np.stack(np.meshgrid(*[np.arange(n)] * d, indexing="ij"), -1).reshape(-1, d)
        assert np.array_equal(idx, expect)

    def test_off_lattice_point(self):
        with pytest.raises(InvalidFieldError):
            UniformGrid.box(1.0, 4).index_of([0.1])

    def test_field_rejects_nan(self):
        with pytest.raises(InvalidFieldError):
            SampledField(UniformGrid.box(1.0, 4), [0, np.nan, 0, 0])


class TestFourier:
    def test_gaussian_fixed_point(self, grid):
        f = SampledField.from_function(grid, lambda x: np.exp(-(x**2) / 2))
        F = fourier_transform(f)
        xi = F.grid.axes()[0]
        assert np.max(np.abs(F.values - np.exp(-(xi**2) / 2))) < 1e-10

    def test_gaussian_against_quadrature(self, grid):
        f = SampledField.from_function(grid, lambda x: np.exp(-(x**2) / 2))
        F = fourier_transform(f)
        xi = F.grid.axes()[0]
        for k in (0, 100, 128, 140, 170):
            ref = _ft_quad(lambda x: mpmath.exp(-(x**2) / 2), xi[k])
            assert abs(F.values[k] - ref) < 1e-10

    def test_modulated_gaussian_peaks_at_three(self, grid):
        f = SampledField.from_function(grid, lambda x: np.exp(-(x**2) / 2 + 3j * x))
        F = fourier_transform(f)
        xi = F.grid.axes()[0]
        assert xi[np.argmax(np.abs(F.values))] == pytest.approx(3.0, abs=F.grid.steps[0])
        k = int(np.argmin(np.abs(xi - 2.5)))
        ref = _ft_quad(lambda x: mpmath.exp(-(x**2) / 2 + 3j * x), xi[k])
        assert abs(F.values[k] - ref) < 1e-10

    def test_zero(self, grid):
        assert not np.any(fourier_transform(SampledField.zeros(grid)).values)
        assert not np.any(inverse_fourier(SampledField.zeros(grid.reciprocal())).values)

    def test_round_trip_gaussian(self, gaussian):
        back = inverse_fourier(fourier_transform(gaussian))
        assert rel_l2(back.values, gaussian.values) < 1e-10
        assert back.grid.matches(gaussian.grid)

    @given(st.integers(0, 2**31 - 1))
    def test_round_trip_band_limited(self, seed):
        rng = np.random.default_rng(seed)
        g = UniformGrid.box(6.0, 128)
        rec = g.reciprocal()
        xi = rec.axes()[0]
        spec = np.where(np.abs(xi) < np.max(np.abs(xi)) / 4, rng.normal(size=128) + 1j * rng.normal(size=128), 0)
        f = inverse_fourier(SampledField(rec, spec))
        back = inverse_fourier(fourier_transform(f))
        assert rel_l2(back.values, f.values) < 1e-9

    def test_parseval(self, gaussian):
        assert fourier_transform(gaussian).l2_norm() == pytest.approx(gaussian.l2_norm(), rel=1e-10)

    @given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10), st.integers(0, 1000))
    def test_linearity(self, a, b, seed):
        g = UniformGrid.box(4.0, 64)
        rng = np.random.default_rng(seed)
        f = SampledField(g, rng.normal(size=64) + 1j * rng.normal(size=64))
        h = SampledField(g, rng.normal(size=64))
        lhs = fourier_transform(f.with_values(a * f.values + b * h.values)).values
        rhs = a * fourier_transform(f).values + b * fourier_transform(h).values
        scale = max(np.linalg.norm(rhs), np.linalg.norm(f.values) + np.linalg.norm(h.values))
        assert np.linalg.norm(lhs - rhs) <= 1e-13 * scale * (abs(a) + abs(b) + 1)

    def test_sheared_grid_refused(self):
        g = UniformGrid(OrderedBasis(((1, 0), (1, 1))), (4, 4), (1, 1), (0, 0))
        with pytest.raises(UnsupportedBasisError):
            fourier_transform(SampledField.zeros(g))

    def test_spectral_derivative_of_sine(self):
        g = UniformGrid.box(math.pi, 64)
        x = g.axes()[0]
        d3 = spectral_derivative(np.sin(x), g, (3,))
        assert np.max(np.abs(d3 + np.cos(x))) < 1e-11


class TestGeometry:
    def test_unit_square(self):
        P = kappa_parallelepiped(OrderedBasis.identity(2))
        assert P.contains([0.5, 0.5]) and not P.contains([1.0, 0.0])
        assert P.volume == 1.0

    def test_stretched(self):
        P = kappa_parallelepiped(OrderedBasis(((2, 0), (0, 1))))
        assert P.volume == pytest.approx(2.0)
        assert P.contains([1.9, 0.5]) and not P.contains([2.0, 0.5])

    def test_sheared(self):
        P = kappa_parallelepiped(OrderedBasis(((1, 0), (1, 1))))
        assert P.volume == pytest.approx(1.0)
        # coordinates solve t1 + t2 = 1.5, t2 = 0.6
        assert np.allclose(P.coordinates([1.5, 0.6]), [0.9, 0.6])
        assert P.contains([1.5, 0.6])

    def test_phase_split_standard(self):
        ps = is_phase_split(OrderedBasis.identity(4))
        assert ps and ps.position == (0, 1)

    def test_phase_split_interleaved(self):
        ps = is_phase_split(OrderedBasis.permuted([0, 2, 1, 3]))
        assert ps and ps.position == (0, 2)

    def test_mixed_vector_not_split(self):
        E = OrderedBasis(((1, 0, 1, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
        assert not is_phase_split(E)
