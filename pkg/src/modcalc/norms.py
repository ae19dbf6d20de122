"""Mixed (quasi-)norms over ordered bases and modulation-space norms.

The mixed norm of ``f`` with exponents ``p_1, ..., p_n`` over the ordered
basis ``e_1, ..., e_n`` is computed inductively::

    g_0(x) = |f(sum x_k e_k) omega(sum x_k e_k)|
    g_k    = || g_{k-1}( . , x_{k+1}, ...) ||_{L^{p_k}(dx_k)}

so the first basis vector is integrated innermost. ``L^p`` is realized by
the midpoint rule ``(sum |g|^p h)^(1/p)`` and ``L^inf`` by the sample max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ConfigurationError, InvalidExponentError, InvalidWeightError
from .lattice import OrderedBasis, SampledField, UniformGrid
from .stft import Window, stft
from .weights import Weight, one, weight_from_json

__all__ = [
    "MixedNormSpec",
    "ModSpaceSpec",
    "QBFReport",
    "EmbeddingReport",
    "parse_exponent",
    "conjugate_exponent",
    "mixed_norm",
    "log_mixed_norm",
    "discrete_mixed_norm",
    "qbf_axiom_check",
    "modulation_norm",
    "embedding_check",
    "spec_from_json",
    "basis_from_json",
]


def parse_exponent(p) -> float:
    """Accept positive reals, ``math.inf`` or the strings ``"inf"``/``"∞"``."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        try:
            p = float(p)
        except ValueError as exc:
            raise InvalidExponentError(f"bad exponent {p!r}") from exc
    p = float(p)
    if math.isnan(p) or not p > 0:
        raise InvalidExponentError(f"exponent must lie in (0, inf], got {p}")
    return p


def conjugate_exponent(p) -> float:
    """``inf`` on (0, 1], ``p / (p - 1)`` on (1, inf), and 1 at ``inf``."""
    p = parse_exponent(p)
    if p <= 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class MixedNormSpec:
    """Ordered basis, one exponent per basis vector and a weight."""

    basis: OrderedBasis
    exponents: tuple
    weight: Weight | None = None

    def __post_init__(self):
        exps = tuple(parse_exponent(p) for p in self.exponents)
        if len(exps) != self.basis.dim:
            raise InvalidExponentError("need one exponent per basis vector")
        object.__setattr__(self, "exponents", exps)
        if self.weight is not None and self.weight.dim != self.basis.dim:
            raise InvalidWeightError("weight dimension differs from the basis")

    @classmethod
    def standard(cls, exponents, weight: Weight | None = None) -> "MixedNormSpec":
        return cls(OrderedBasis.identity(len(exponents)), tuple(exponents), weight)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def r(self) -> float:
        """Quasi-norm order ``min(1, p_1, ..., p_n)``."""
        return min(1.0, *self.exponents)

    @property
    def max_exponent(self) -> float:
        return max(self.exponents)

    @property
    def min_exponent(self) -> float:
        return min(self.exponents)

    def to_json(self) -> dict:
        return {
            "basis": [list(v) for v in self.basis.vectors],
            "exponents": ["inf" if math.isinf(p) else p for p in self.exponents],
            "weight": None if self.weight is None else self.weight.to_json(),
        }


@dataclass(frozen=True)
class ModSpaceSpec:
    """Weight on phase space, a mixed norm over R^{2d} and an analysis window."""

    weight: Weight
    norm: MixedNormSpec
    window: Window = field(default_factory=Window.gaussian)

    def __post_init__(self):
        if self.norm.dim != 2 * self.window.dim:
            raise ConfigurationError("norm must live on R^{2d} for a d-dimensional window")
        if self.weight.dim != self.norm.dim:
            raise InvalidWeightError("modulation weight must live on phase space")

    @classmethod
    def lpq(cls, p, q, d: int = 1, weight: Weight | None = None, window: Window | None = None, order: int = 1):
        """``L^{p,q}_1`` (x inner, xi outer) or ``L^{p,q}_2`` (xi inner, x outer)."""
        window = Window.gaussian(1.0, d) if window is None else window
        weight = one(2 * d) if weight is None else weight
        if order == 1:
            basis = OrderedBasis.identity(2 * d)
            exps = (p,) * d + (q,) * d
        elif order == 2:
            basis = OrderedBasis.permuted(list(range(d, 2 * d)) + list(range(d)))
            exps = (q,) * d + (p,) * d
        else:
            raise ConfigurationError("preset order is 1 or 2")
        return cls(weight, MixedNormSpec(basis, exps), window)

    @property
    def d(self) -> int:
        return self.window.dim

    def to_json(self) -> dict:
        return {"weight": self.weight.to_json(), "norm": self.norm.to_json(), "window": self.window.to_json()}


def _aligned(f: SampledField, basis: OrderedBasis) -> tuple[np.ndarray, tuple]:
    """Values and steps with axis k running along ``basis.vectors[k]``."""
    g = f.grid
    if g.basis == basis:
        return f.values, g.steps
    perm = g.basis.permutation_to(basis)
    if perm is None:
        raise AlignmentError("field grid is not aligned with the norm basis")
    return np.transpose(f.values, perm), tuple(g.steps[k] for k in perm)


def _nested_log_norm(mag: np.ndarray, steps, exponents) -> float:
    """Log of the iterated norm of the nonnegative array ``mag`` (axis 0 innermost)."""
    g = np.asarray(mag, dtype=float)
    if not np.any(g > 0):
        return -math.inf
    log_scale = 0.0
    for h, p in zip(steps, exponents):
        m = float(np.max(g))
        if m > 0:
            g = g / m
            log_scale += math.log(m)
        if math.isinf(p):
            g = np.max(g, axis=0)
        else:
            g = (np.sum(g**p, axis=0) * h) ** (1.0 / p)
    total = float(g)
    return math.log(total) + log_scale if total > 0 else -math.inf


def _weighted_magnitude(values: np.ndarray, points: np.ndarray, weight: Weight | None):
    """``|f| * omega`` scaled by ``exp(-shift)`` to stay finite; returns (array, shift)."""
    mag = np.abs(values)
    if weight is None:
        return mag, 0.0
    with np.errstate(divide="ignore"):
        logs = np.log(mag) + weight.log_evaluate(points)
    top = float(np.max(logs))
    if not math.isfinite(top):
        return np.zeros_like(mag), 0.0
    return np.exp(logs - top), top


def log_mixed_norm(f: SampledField, spec: MixedNormSpec, extra_weight: Weight | None = None) -> float:
    """Natural log of :func:`mixed_norm` (``-inf`` for ``f = 0``)."""
    if f.grid.dim != spec.dim:
        raise AlignmentError("field and norm dimensions differ")
    weight = spec.weight
    if extra_weight is not None:
        weight = extra_weight if weight is None else weight * extra_weight
    values, steps = _aligned(f, spec.basis)
    pts = f.grid.points()
    if values is not f.values:
        perm = f.grid.basis.permutation_to(spec.basis)
        pts = np.transpose(pts, perm + (len(perm),))
    mag, shift = _weighted_magnitude(values, pts, weight)
    return _nested_log_norm(mag, steps, spec.exponents) + shift


def mixed_norm(f: SampledField, spec: MixedNormSpec) -> float:
    """Weighted mixed (quasi-)norm of ``f`` over the ordered basis of ``spec``.

    Parameters
    ----------
    f : SampledField
        Samples on a grid whose basis equals ``spec.basis`` up to a
        permutation of the vectors.
    spec : MixedNormSpec

    Returns
    -------
    float
        Zero exactly when ``f`` vanishes.
    """
    lg = log_mixed_norm(f, spec)
    return 0.0 if lg == -math.inf else math.exp(min(lg, 709.7))


def discrete_mixed_norm(a, spec: MixedNormSpec, origin=None) -> float:
    """Norm of the step function ``sum_j a(j) chi_{j + kappa(E)}``.

    ``a`` is an array indexed in basis coordinates (axis k counts multiples of
    ``e_k``); ``origin`` is the index of ``j = 0`` (default: zero). Each cell has
    unit coordinate length, so every inner integral is a plain power sum. The
    weight, if any, is sampled at the lattice points ``j``.
    """
    arr = np.asarray(a)
    if arr.ndim != spec.dim:
        raise AlignmentError("sequence rank differs from the basis dimension")
    mag = np.abs(arr).astype(float)
    if spec.weight is not None:
        origin = np.zeros(arr.ndim) if origin is None else np.asarray(origin, float)
        idx = np.stack(np.meshgrid(*[np.arange(n) for n in arr.shape], indexing="ij"), axis=-1) - origin
        pts = idx @ np.array(spec.basis.vectors)
        mag, shift = _weighted_magnitude(arr, pts, spec.weight)
    else:
        shift = 0.0
    lg = _nested_log_norm(mag, (1.0,) * arr.ndim, spec.exponents) + shift
    return 0.0 if lg == -math.inf else math.exp(min(lg, 709.7))


@dataclass(frozen=True)
class QBFReport:
    """Empirical constants for translation, solidity and r-subadditivity."""

    translation: float
    solidity: float
    subadditivity: float
    r: float
    trials: int
    seed: int

    def passed(self, tol: float = 1e-9) -> bool:
        return max(self.translation, self.solidity, self.subadditivity) <= 1.0 + tol

    def to_json(self) -> dict:
        return {
            "translation": self.translation,
            "solidity": self.solidity,
            "subadditivity": self.subadditivity,
            "r": self.r,
            "trials": self.trials,
            "seed": self.seed,
        }


def qbf_axiom_check(
    spec: MixedNormSpec,
    v: Weight,
    trials: int = 100,
    seed: int = 0,
    n: int | None = None,
    step: float = 0.5,
) -> QBFReport:
    """Randomized check of the quasi-Banach function space axioms.

    Fields are supported in the middle half of a basis-aligned grid so that
    shifts by whole cells (up to a quarter of the grid) relabel samples
    without wrap-around.
    """
    if trials < 100:
        raise ConfigurationError("at least 100 trials are required")
    d = spec.dim
    n = n if n is not None else max(4, int(round(4096 ** (1.0 / d))) // 4 * 4)
    grid = UniformGrid(spec.basis, (n,) * d, (step,) * d, (-(n // 2) * step + 0.5 * step,) * d)
    rng = np.random.default_rng(seed)
    inner = tuple(slice(n // 4, n - n // 4) for _ in range(d))
    r = spec.r
    t_max = s_max = a_max = 0.0

    def rand_field():
        vals = np.zeros(grid.shape, complex)
        shape = vals[inner].shape
        vals[inner] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return vals

    for _ in range(trials):
        fv = rand_field()
        f = SampledField(grid, fv)
        nf = mixed_norm(f, spec)
        shift = rng.integers(-(n // 4), n // 4 + 1, size=d)
        moved = SampledField(grid, np.roll(fv, tuple(shift), axis=tuple(range(d))))
        x = (shift * step) @ np.array(spec.basis.vectors)
        t_max = max(t_max, mixed_norm(moved, spec) / (float(v.evaluate(x[None, :])[0]) * nf))

        u = rng.uniform(0.0, 1.0, grid.shape)
        s_max = max(s_max, mixed_norm(SampledField(grid, fv * u), spec) / nf)

        g = SampledField(grid, rand_field())
        ng = mixed_norm(g, spec)
        total = mixed_norm(SampledField(grid, fv + g.values), spec)
        a_max = max(a_max, total**r / (nf**r + ng**r))
    return QBFReport(float(t_max), float(s_max), float(a_max), r, trials, seed)


def modulation_norm(f: SampledField, spec: ModSpaceSpec) -> float:
    """``|| V_phi f * omega ||`` in the mixed norm of ``spec`` over phase space."""
    if not np.any(f.values):
        return 0.0
    S = stft(f, spec.window)
    lg = log_mixed_norm(S.field, spec.norm, extra_weight=spec.weight)
    return 0.0 if lg == -math.inf else math.exp(min(lg, 709.7))


@dataclass(frozen=True)
class EmbeddingReport:
    max_ratio: float
    min_ratio: float
    ratios: tuple

    @property
    def finite(self) -> bool:
        return math.isfinite(self.max_ratio)

    def to_json(self) -> dict:
        return {"max_ratio": self.max_ratio, "min_ratio": self.min_ratio, "ratios": list(self.ratios)}


def embedding_check(fields, spec1: ModSpaceSpec, spec2: ModSpaceSpec) -> EmbeddingReport:
    """Ratios ``||f||_{spec2} / ||f||_{spec1}`` over an ensemble (zero members skipped)."""
    ratios = []
    for f in fields:
        n1 = modulation_norm(f, spec1)
        if n1 == 0.0:
            continue
        n2 = n1 if spec2 == spec1 else modulation_norm(f, spec2)
        ratios.append(n2 / n1)
    if not ratios:
        raise ConfigurationError("ensemble has no nonzero member")
    return EmbeddingReport(max(ratios), min(ratios), tuple(ratios))


def basis_from_json(obj, dim: int) -> OrderedBasis:
    if obj is None or obj == "identity":
        return OrderedBasis.identity(dim)
    if isinstance(obj, str) and obj.startswith("permuted:"):
        return OrderedBasis.permuted([int(k) for k in obj.split(":", 1)[1].split(",")])
    if isinstance(obj, dict) and "permutation" in obj:
        return OrderedBasis.permuted(obj["permutation"])
    return OrderedBasis(tuple(tuple(v) for v in obj))


def spec_from_json(obj: dict) -> MixedNormSpec:
    """Parse ``{"exponents": [...], "basis": ..., "weight": {...}}``.

    ``basis`` is ``"identity"``, ``"permuted:i,j,..."``, ``{"permutation": [...]}``
    or an explicit list of row vectors.
    """
    unknown = set(obj) - {"exponents", "basis", "weight"}
    if unknown:
        raise ConfigurationError(f"unknown norm keys {sorted(unknown)}")
    exps = [parse_exponent(p) for p in obj["exponents"]]
    basis = basis_from_json(obj.get("basis"), len(exps))
    weight = weight_from_json(obj["weight"]) if obj.get("weight") else None
    return MixedNormSpec(basis, tuple(exps), weight)
