"""Ordered bases, uniform grids, sampled fields and the discrete Fourier transform.

The Fourier transform is normalized as

    (F f)(xi) = (2 pi)^{-d/2} \\int f(x) exp(-i <x, xi>) dx,

and realized on a uniform grid by a DFT scaled by the cell volume and
(2 pi)^{-d/2}, with analytic phase factors for the grid offsets. For a grid
with offset ``o``, step ``h`` and ``N`` samples the reciprocal grid has step
``2 pi / (N h)`` and offset ``-(N // 2) * 2 pi / (N h)`` (it contains 0), so

    F[m] = (2 pi)^{-1/2} h exp(-i o xi_m) * fft(f_j exp(-i x_j w0))[m],

with ``w0`` the first reciprocal sample. The inverse transform is the exact
algebraic inverse of this map.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidFieldError,
    OrderTooHighError,
    SingularBasisError,
    UnsupportedBasisError,
)

__all__ = [
    "OrderedBasis",
    "UniformGrid",
    "SampledField",
    "QuantizationSpec",
    "Parallelepiped",
    "PhaseSplit",
    "fourier_transform",
    "inverse_fourier",
    "dft_axes",
    "spectral_derivative",
    "kappa_parallelepiped",
    "is_phase_split",
]

_DET_RTOL = 1e-12


def _as_tuple(values, cast=float):
    return tuple(cast(v) for v in values)


@dataclass(frozen=True)
class OrderedBasis:
    """Ordered basis ``e_1, ..., e_d`` of R^d, stored as rows of ``vectors``."""

    vectors: tuple

    def __post_init__(self):
        vecs = tuple(tuple(float(c) for c in v) for v in self.vectors)
        d = len(vecs)
        if d == 0 or any(len(v) != d for v in vecs):
            raise InvalidDimensionError("basis must consist of d vectors in R^d")
        object.__setattr__(self, "vectors", vecs)
        m = np.array(vecs)
        scale = max(1.0, float(np.max(np.abs(m)))) ** d
        if abs(np.linalg.det(m)) <= _DET_RTOL * scale:
            raise SingularBasisError("basis vectors are linearly dependent")

    @classmethod
    def identity(cls, d: int) -> "OrderedBasis":
        return cls(tuple(tuple(np.eye(d)[k]) for k in range(d)))

    @classmethod
    def permuted(cls, order: Sequence[int]) -> "OrderedBasis":
        """Standard basis vectors taken in the given order."""
        eye = np.eye(len(order))
        return cls(tuple(tuple(eye[k]) for k in order))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    @property
    def matrix(self) -> np.ndarray:
        """Matrix whose columns are the basis vectors."""
        return np.array(self.vectors).T

    @property
    def is_identity(self) -> bool:
        return np.array_equal(np.array(self.vectors), np.eye(self.dim))

    def permutation_to(self, other: "OrderedBasis", tol: float = 1e-12):
        """Return ``perm`` with ``other.vectors[k] == self.vectors[perm[k]]``, or None."""
        if other.dim != self.dim:
            return None
        mine = np.array(self.vectors)
        perm = []
        for v in np.array(other.vectors):
            hits = np.flatnonzero(np.all(np.abs(mine - v) <= tol, axis=1))
            if len(hits) != 1:
                return None
            perm.append(int(hits[0]))
        if sorted(perm) != list(range(self.dim)):
            return None
        return tuple(perm)


@dataclass(frozen=True)
class UniformGrid:
    """Basis-aligned lattice: point ``j`` is ``sum_k (o_k + j_k h_k) e_k``.

    ``conjugate_offsets`` remembers the offsets of the grid this one is the
    reciprocal of, so that transforming back lands on the original samples.
    """

    basis: OrderedBasis
    counts: tuple
    steps: tuple
    offsets: tuple
    conjugate_offsets: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "counts", _as_tuple(self.counts, int))
        object.__setattr__(self, "steps", _as_tuple(self.steps))
        object.__setattr__(self, "offsets", _as_tuple(self.offsets))
        if self.conjugate_offsets is not None:
            object.__setattr__(self, "conjugate_offsets", _as_tuple(self.conjugate_offsets))
        d = self.basis.dim
        if not (len(self.counts) == len(self.steps) == len(self.offsets) == d):
            raise InvalidDimensionError("counts, steps and offsets must have length d")
        if any(n <= 0 for n in self.counts) or any(not h > 0 for h in self.steps):
            raise InvalidDimensionError("counts and steps must be positive")

    @classmethod
    def box(cls, L: float = 12.0, N: int = 256, d: int = 1, centered: bool = True) -> "UniformGrid":
        """Grid on [-L, L)^d with N samples per axis.

        Cell-centered by default (samples at -L + h/2 + j h). With
        ``centered=False`` the samples are -L + j h, which includes the origin
        for even N.
        """
        h = 2.0 * L / N
        o = -L + (0.5 * h if centered else 0.0)
        return cls(OrderedBasis.identity(d), (N,) * d, (h,) * d, (o,) * d)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_volume(self) -> float:
        return abs(float(np.linalg.det(self.basis.matrix))) * float(np.prod(self.steps))

    def axes(self) -> list[np.ndarray]:
        """Basis coordinates ``o_k + j h_k`` along each axis."""
        return [o + h * np.arange(n) for n, h, o in zip(self.counts, self.steps, self.offsets)]

    def coordinates(self) -> np.ndarray:
        """Basis coordinates of all samples, shape ``counts + (d,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        """Sample points in R^d, shape ``counts + (d,)``."""
        return self.coordinates() @ np.array(self.basis.vectors)

    def index_of(self, points) -> np.ndarray:
        """Integer index tuples of the given points; raises if off-lattice."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coords = np.linalg.solve(self.basis.matrix, pts.T).T
        raw = (coords - np.array(self.offsets)) / np.array(self.steps)
        idx = np.rint(raw)
        if np.any(np.abs(raw - idx) > 1e-8) or np.any(idx < 0) or np.any(idx >= np.array(self.counts)):
            raise InvalidFieldError("point is not a sample of this grid")
        return idx.astype(int)

    def reciprocal(self) -> "UniformGrid":
        if not self.basis.is_identity:
            raise UnsupportedBasisError("Fourier transform requires the standard basis")
        steps = tuple(2.0 * math.pi / (n * h) for n, h in zip(self.counts, self.steps))
        if self.conjugate_offsets is not None:
            offsets = self.conjugate_offsets
        else:
            offsets = tuple(-(n // 2) * w for n, w in zip(self.counts, steps))
        return UniformGrid(self.basis, self.counts, steps, offsets, conjugate_offsets=self.offsets)

    def phase_space(self) -> "UniformGrid":
        """Tensor product of this grid (position) with its reciprocal (frequency)."""
        rec = self.reciprocal()
        d = self.dim
        return UniformGrid(
            OrderedBasis.identity(2 * d),
            self.counts + rec.counts,
            self.steps + rec.steps,
            self.offsets + rec.offsets,
        )

    def matches(self, other: "UniformGrid", rtol: float = 1e-12) -> bool:
        if self.basis != other.basis or self.counts != other.counts:
            return False
        scale = max(max(abs(v) for v in self.offsets + self.steps), 1.0)
        diffs = np.abs(np.array(self.steps + self.offsets) - np.array(other.steps + other.offsets))
        return bool(np.all(diffs <= rtol * scale))

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "counts": list(self.counts),
            "steps": list(self.steps),
            "offsets": list(self.offsets),
            "basis": [list(v) for v in self.basis.vectors],
        }


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples on a :class:`UniformGrid`; values are read-only."""

    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.size != self.grid.size:
            raise InvalidFieldError(f"expected {self.grid.size} values, got {vals.size}")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise InvalidFieldError("field contains NaN or Inf")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: UniformGrid, func) -> "SampledField":
        """Sample ``func`` at the grid points; ``func`` gets arrays x_1..x_d."""
        pts = grid.points()
        return cls(grid, func(*np.moveaxis(pts, -1, 0)))

    @classmethod
    def zeros(cls, grid: UniformGrid) -> "SampledField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, values)


@dataclass(frozen=True)
class QuantizationSpec:
    """Real d x d matrix ``A`` selecting the quantization ``Op_A``."""

    A: tuple

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.A, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise InvalidDimensionError("quantization matrix must be square")
        object.__setattr__(self, "A", tuple(tuple(float(c) for c in row) for row in m))

    @classmethod
    def weyl(cls, d: int = 1) -> "QuantizationSpec":
        return cls(0.5 * np.eye(d))

    @classmethod
    def kohn_nirenberg(cls, d: int = 1) -> "QuantizationSpec":
        return cls(np.zeros((d, d)))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A)

    @property
    def dim(self) -> int:
        return len(self.A)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)


def _check_transformable(f: SampledField) -> None:
    if not f.grid.basis.is_identity:
        raise UnsupportedBasisError("Fourier transform requires the standard basis")
    if not np.all(np.isfinite(f.values)):
        raise InvalidFieldError("field contains NaN or Inf")


def dft_axes(values, steps, offsets, freq_offsets, axes, inverse=False) -> np.ndarray:
    """Continuous-normalized DFT of ``values`` along ``axes``.

    ``steps``/``offsets`` describe the input sampling along each listed axis and
    ``freq_offsets`` the first sample of the output grid. For ``inverse=True``
    the roles are swapped: ``steps`` and ``offsets`` describe the frequency
    input and ``freq_offsets`` the first position sample of the output.
    """
    out = np.asarray(values, dtype=complex)
    for ax, h, o, w0 in zip(axes, steps, offsets, freq_offsets):
        n = out.shape[ax]
        j = np.arange(n)
        shape = [1] * out.ndim
        shape[ax] = n
        dual_step = 2.0 * math.pi / (n * h)
        if not inverse:
            pre = np.exp(-1j * (o + j * h) * w0).reshape(shape)
            post = (h / math.sqrt(2.0 * math.pi)) * np.exp(-1j * o * (j * dual_step)).reshape(shape)
            out = np.fft.fft(out * pre, axis=ax) * post
        else:
            # input sampled at o + m h (frequencies); output positions w0 + j * dual_step
            pre = np.exp(1j * w0 * (j * h)).reshape(shape)
            post = (n * h / math.sqrt(2.0 * math.pi)) * np.exp(1j * (w0 + j * dual_step) * o).reshape(shape)
            out = np.fft.ifft(out * pre, axis=ax) * post
    return out


def fourier_transform(f: SampledField) -> SampledField:
    """Samples of the continuous Fourier transform on the reciprocal grid."""
    _check_transformable(f)
    rec = f.grid.reciprocal()
    vals = dft_axes(f.values, f.grid.steps, f.grid.offsets, rec.offsets, range(f.grid.dim))
    return SampledField(rec, vals)


def inverse_fourier(F: SampledField) -> SampledField:
    """Inverse of :func:`fourier_transform`; lands on ``F.grid.reciprocal()``."""
    _check_transformable(F)
    out_grid = F.grid.reciprocal()
    vals = dft_axes(F.values, F.grid.steps, F.grid.offsets, out_grid.offsets, range(F.grid.dim), inverse=True)
    return SampledField(out_grid, vals)


def spectral_derivative(
    values: np.ndarray,
    grid: UniformGrid,
    alpha: Sequence[int],
    floor: float = 1e-13,
    max_amplification: float = 1e12,
    return_amplification: bool = False,
):
    """``d^alpha f`` by Fourier multiplication with ``(i xi)^alpha``.

    Spectral coefficients below ``floor * max|F|`` are discarded (they are
    roundoff) and the largest multiplier on the retained band must stay under
    ``max_amplification``. With ``return_amplification`` the pair
    ``(derivative, amplification)`` is returned.
    """
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) == 0:
        out = np.asarray(values, dtype=complex)
        return (out, 1.0) if return_amplification else out
    f = SampledField(grid, values)
    F = fourier_transform(f)
    vals = np.array(F.values)
    peak = np.max(np.abs(vals))
    if peak == 0.0:
        out = np.zeros(grid.shape, dtype=complex)
        return (out, 0.0) if return_amplification else out
    keep = np.abs(vals) >= floor * peak
    vals[~keep] = 0.0
    mult = np.ones(grid.shape, dtype=complex)
    for ax, (xi, a) in enumerate(zip(F.grid.axes(), alpha)):
        shape = [1] * grid.dim
        shape[ax] = len(xi)
        mult = mult * ((1j * xi) ** a).reshape(shape)
    amp = float(np.max(np.abs(mult[keep])))
    if amp > max_amplification:
        raise OrderTooHighError(f"spectral amplification {amp:.3g} exceeds {max_amplification:.0e} at order {alpha}")
    out = inverse_fourier(F.with_values(vals * mult)).values
    return (out, amp) if return_amplification else out


@dataclass(frozen=True)
class Parallelepiped:
    """Half-open parallelepiped ``{sum_k t_k e_k : t_k in [0, 1)}``."""

    basis: OrderedBasis

    @property
    def volume(self) -> float:
        return abs(float(np.linalg.det(self.basis.matrix)))

    @property
    def vertices(self) -> np.ndarray:
        d = self.basis.dim
        ts = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
        return ts @ np.array(self.basis.vectors)

    @property
    def edges(self) -> list[tuple[int, int]]:
        d = self.basis.dim
        corners = list(itertools.product((0, 1), repeat=d))
        return [
            (i, j)
            for i, j in itertools.combinations(range(len(corners)), 2)
            if sum(a != b for a, b in zip(corners[i], corners[j])) == 1
        ]

    def coordinates(self, point) -> np.ndarray:
        return np.linalg.solve(self.basis.matrix, np.asarray(point, dtype=float).T).T

    def contains(self, point, tol: float = 1e-12) -> bool | np.ndarray:
        t = self.coordinates(point)
        inside = np.all((t >= -tol) & (t < 1.0 - tol), axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside


def kappa_parallelepiped(E: OrderedBasis) -> Parallelepiped:
    """The parallelepiped spanned by ``E``; singular bases are rejected at construction."""
    return Parallelepiped(E)


@dataclass(frozen=True)
class PhaseSplit:
    split: bool
    position: tuple = ()
    frequency: tuple = ()

    def __bool__(self) -> bool:
        return self.split


def is_phase_split(E: OrderedBasis, tol: float = 1e-12) -> PhaseSplit:
    """Search the d-element subsets of ``E`` for one spanning the position plane."""
    n = E.dim
    if n % 2:
        raise InvalidDimensionError("phase-split test needs an even dimension 2d")
    if n > 8:
        raise InvalidDimensionError("exhaustive phase-split search is limited to 2d <= 8")
    d = n // 2
    vecs = np.array(E.vectors)
    scale = max(1.0, float(np.max(np.abs(vecs))))
    x_only = np.all(np.abs(vecs[:, d:]) <= tol * scale, axis=1)
    xi_only = np.all(np.abs(vecs[:, :d]) <= tol * scale, axis=1)
    for subset in itertools.combinations(range(n), d):
        rest = tuple(k for k in range(n) if k not in subset)
        if all(x_only[list(subset)]) and all(xi_only[list(rest)]):
            # spans follow from linear independence of E
            return PhaseSplit(True, subset, rest)
    return PhaseSplit(False)
