"""Weight functions: evaluation, moderateness scans, class diagnostics, mollification.

Every weight works in log space (``log_evaluate``) so that scans over large
boxes report overflow as ``+inf`` instead of producing NaN.

Class memberships are finite-box diagnostics. :func:`classify_PEs` and
:func:`weight_compatibility` scan a ladder of boxes ``L, 2L, 4L, ...`` over a
geometrically spaced point set that is nested across the ladder, so the scanned
supremum is nondecreasing along it; a constant that still grows between the
last two boxes (or overflows) is reported as infinite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve
from scipy.special import gammaln

from .errors import (
    InvalidDimensionError,
    InvalidWeightError,
    MollificationDivergedError,
)
from .lattice import OrderedBasis, SampledField, UniformGrid, spectral_derivative

__all__ = [
    "Weight",
    "Polynomial",
    "ExpPower",
    "Product",
    "TensorSplit",
    "Power",
    "Tabulated",
    "MollifiedWeight",
    "ModerationReport",
    "PEsClassification",
    "GevreyReport",
    "CompatibilityReport",
    "MollifyReport",
    "evaluate",
    "moderation_constant",
    "classify_PEs",
    "mollify",
    "gevrey_derivative_check",
    "weight_compatibility",
    "exponential_bounds",
    "weight_from_json",
    "one",
    "SHIPPED_WEIGHTS",
]

_LOG_MAX = math.log(np.finfo(float).max)


def _points(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != dim:
        raise InvalidDimensionError(f"points of dimension {arr.shape[-1]} for a weight on R^{dim}")
    return arr


class Weight:
    """Positive function on R^dim. Subclasses implement ``_log``."""

    dim: int

    def log_evaluate(self, x) -> np.ndarray:
        return self._log(_points(x, self.dim))

    def evaluate(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_evaluate(x))

    __call__ = evaluate

    def _log(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_json(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __mul__(self, other: "Weight") -> "Product":
        return Product((self, other))

    def __pow__(self, exponent: float) -> "Power":
        return Power(self, exponent)


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class Polynomial(Weight):
    """``(1 + |x|^2)^(t/2)``."""

    t: float
    dim: int = 1

    def _log(self, x):
        return 0.5 * self.t * np.log1p(np.sum(x * x, axis=-1))

    def to_json(self):
        return {"form": "polynomial", "t": self.t, "dim": self.dim}


@dataclass(frozen=True)
class ExpPower(Weight):
    """``exp(r |x|^(1/s))``; ``r`` may be negative, ``s < 1`` gives super-exponential forms."""

    r: float
    s: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidWeightError("ExpPower needs s > 0")

    def _log(self, x):
        return self.r * _norm(x) ** (1.0 / self.s)

    def to_json(self):
        return {"form": "exp_power", "r": self.r, "s": self.s, "dim": self.dim}


@dataclass(frozen=True)
class Product(Weight):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        dims = {w.dim for w in self.factors}
        if len(dims) != 1:
            raise InvalidDimensionError("product factors must share a dimension")

    @property
    def dim(self):
        return self.factors[0].dim

    def _log(self, x):
        total = self.factors[0]._log(x)
        for w in self.factors[1:]:
            total = total + w._log(x)
        return total

    def to_json(self):
        return {"form": "product", "factors": [w.to_json() for w in self.factors]}


@dataclass(frozen=True)
class TensorSplit(Weight):
    """``w_x(x) * w_xi(xi)`` on R^(dx + dxi), the first block holding ``x``."""

    w_x: Weight
    w_xi: Weight

    @property
    def dim(self):
        return self.w_x.dim + self.w_xi.dim

    def _log(self, x):
        k = self.w_x.dim
        return self.w_x._log(x[..., :k]) + self.w_xi._log(x[..., k:])

    def to_json(self):
        return {"form": "tensor", "x": self.w_x.to_json(), "xi": self.w_xi.to_json()}


@dataclass(frozen=True)
class Power(Weight):
    """``base(x) ** exponent``; exponent -1 gives the reciprocal weight."""

    base: Weight
    exponent: float

    @property
    def dim(self):
        return self.base.dim

    def _log(self, x):
        return self.exponent * self.base._log(x)

    def to_json(self):
        return {"form": "power", "base": self.base.to_json(), "exponent": self.exponent}


@dataclass(frozen=True, eq=False)
class Tabulated(Weight):
    """Multilinear interpolation of positive samples, clamped to the table outside it."""

    table: SampledField

    def __post_init__(self):
        vals = self.table.values
        if np.any(np.abs(vals.imag) > 0) or np.any(vals.real <= 0):
            raise InvalidWeightError("tabulated weight values must be real and positive")
        g = self.table.grid
        interp = RegularGridInterpolator(g.axes(), np.log(vals.real), method="linear")
        object.__setattr__(self, "_interp", interp)

    @property
    def dim(self):
        return self.table.grid.dim

    def _log(self, x):
        g = self.table.grid
        coords = np.linalg.solve(g.basis.matrix, x.reshape(-1, self.dim).T).T
        for k, ax in enumerate(g.axes()):
            coords[:, k] = np.clip(coords[:, k], ax[0], ax[-1])
        return self._interp(coords).reshape(x.shape[:-1])

    def to_json(self):
        from .fieldio import field_to_json

        return {"form": "tabulated", "field": field_to_json(self.table)}


@dataclass(frozen=True, eq=False)
class MollifiedWeight(Tabulated):
    """Tabulated ``omega * phi`` together with exact tables of its derivatives.

    ``derivatives`` maps multi-indices to real arrays on ``table.grid``,
    computed as ``omega * d^alpha phi`` with closed-form Gaussian derivatives.
    """

    derivatives: dict = field(default_factory=dict)
    source: Weight | None = None

    def derivative_table(self, alpha) -> np.ndarray:
        return self.derivatives[tuple(alpha)]

    @property
    def max_order(self) -> int:
        return max(sum(a) for a in self.derivatives)


def one(dim: int = 1) -> Polynomial:
    """The constant weight 1."""
    return Polynomial(0.0, dim)


def evaluate(w: Weight, x) -> np.ndarray:
    return w.evaluate(x)


def weight_from_json(obj: dict) -> Weight:
    form = obj.get("form")
    if form == "one":
        return one(int(obj.get("dim", 1)))
    if form == "polynomial":
        return Polynomial(float(obj["t"]), int(obj.get("dim", 1)))
    if form == "exp_power":
        return ExpPower(float(obj["r"]), float(obj.get("s", 1.0)), int(obj.get("dim", 1)))
    if form == "product":
        return Product(tuple(weight_from_json(o) for o in obj["factors"]))
    if form == "tensor":
        return TensorSplit(weight_from_json(obj["x"]), weight_from_json(obj["xi"]))
    if form == "power":
        return Power(weight_from_json(obj["base"]), float(obj["exponent"]))
    if form == "tabulated":
        from .fieldio import field_from_json

        return Tabulated(field_from_json(obj["field"])[0])
    raise InvalidWeightError(f"unknown weight form {form!r}")


# -- scans --------------------------------------------------------------------


def _linear_axis(L: float, n: int) -> np.ndarray:
    return np.linspace(-L, L, n)


def _geometric_axis(L: float, per_octave: int, lowest: float = 0.25) -> np.ndarray:
    """``{0} U {+-2^(k/q)}`` truncated to ``[-L, L]``; nested in ``L``."""
    k_lo = math.floor(per_octave * math.log2(lowest))
    k_hi = math.floor(per_octave * math.log2(L) + 1e-9)
    pos = 2.0 ** (np.arange(k_lo, k_hi + 1) / per_octave)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _tensor_points(axis: np.ndarray, dim: int) -> np.ndarray:
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, dim)


def _pair_log_sup(log_ratio, pts: np.ndarray, chunk: int = 4096):
    """Max of ``log_ratio(x1, x2)`` over all pairs of ``pts`` and its argmax."""
    best = -np.inf
    arg = (pts[0], pts[0])
    for start in range(0, len(pts), chunk):
        x1 = pts[start : start + chunk]
        vals = log_ratio(x1[:, None, :], pts[None, :, :])
        vals = np.where(np.isnan(vals), np.inf, vals)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[i, j] > best:
            best = float(vals[i, j])
            arg = (x1[i].copy(), pts[j].copy())
    return best, arg


@dataclass(frozen=True)
class ModerationReport:
    constant: float
    log_constant: float
    max_ratio_point: tuple
    grid_spec: dict

    def to_json(self) -> dict:
        return {
            "constant": self.constant,
            "log_constant": self.log_constant,
            "max_ratio_point": [list(map(float, p)) for p in self.max_ratio_point],
            "grid_spec": self.grid_spec,
        }


def _moderation_log_ratio(omega: Weight, v: Weight):
    def log_ratio(x1, x2):
        with np.errstate(invalid="ignore"):
            return omega._log(x1 + x2) - omega._log(x1) - v._log(x2)

    return log_ratio


def moderation_constant(
    omega: Weight, v: Weight, box: float = 8.0, n: int = 64, spacing: str = "linear"
) -> ModerationReport:
    """Sup of ``omega(x1 + x2) / (omega(x1) v(x2))`` over a tensor scan of ``[-box, box]^d``.

    ``spacing="linear"`` uses ``n`` equispaced points per axis (endpoints
    included); ``spacing="geometric"`` uses ``{0} U {+-2^(k/n)}``, which is
    nested in ``box``.
    """
    if omega.dim != v.dim:
        raise InvalidDimensionError("omega and v must share a dimension")
    if spacing == "linear":
        if n < 8:
            raise ValueError("need at least 8 samples per axis")
        axis = _linear_axis(box, n)
    elif spacing == "geometric":
        axis = _geometric_axis(box, n)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    pts = _tensor_points(axis, omega.dim)
    log_c, arg = _pair_log_sup(_moderation_log_ratio(omega, v), pts)
    const = math.inf if log_c >= _LOG_MAX else math.exp(log_c)
    spec = {"box": box, "n": n, "spacing": spacing, "points_per_axis": len(axis), "dim": omega.dim}
    return ModerationReport(const, log_c, arg, spec)


def _ladder(log_sup_at, box: float, levels: int, rtol: float = 1e-9):
    """Evaluate ``log_sup_at(L)`` on ``L = box * 2^k``; decide finiteness from the tail."""
    trail = []
    last = None
    for k in range(levels + 1):
        L = box * 2.0**k
        log_c, arg = log_sup_at(L)
        trail.append((L, log_c))
        last = (log_c, arg)
        if log_c >= _LOG_MAX:
            break
    log_c, arg = last
    finite = log_c < _LOG_MAX
    if finite and len(trail) > 1:
        growth = trail[-1][1] - trail[-2][1]
        finite = growth <= rtol * max(1.0, abs(log_c))
    return finite, log_c, arg, trail


@dataclass(frozen=True)
class PEsClassification:
    verdict: str  # "all", "some" or "none"
    s: float
    r_grid: tuple
    constants: tuple
    finite: tuple
    smallest_finite_r: float | None
    scan: dict

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "s": self.s,
            "r_grid": list(self.r_grid),
            "constants": [c if math.isfinite(c) else "inf" for c in self.constants],
            "finite": list(self.finite),
            "smallest_finite_r": self.smallest_finite_r,
            "scan": self.scan,
        }


def classify_PEs(
    omega: Weight,
    s: float,
    r_grid: Sequence[float],
    box: float = 8.0,
    n: int | None = None,
    levels: int = 10,
) -> PEsClassification:
    """Test ``omega(x1+x2) <~ omega(x1) exp(r|x2|^(1/s))`` for each ``r`` in ``r_grid``.

    ``n`` is the number of geometric samples per octave (default 4 in one
    dimension, 1 otherwise). ``verdict`` is ``"all"`` when every tested ``r``
    gives a finite constant (the finite-grid reading of the Beurling-type
    class), ``"some"`` when at least one does, ``"none"`` otherwise.
    """
    r_grid = tuple(float(r) for r in r_grid)
    if not r_grid or any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be nonempty and increasing")
    q = n if n is not None else (4 if omega.dim == 1 else 1)
    constants, flags = [], []
    for r in r_grid:
        ratio = _moderation_log_ratio(omega, ExpPower(r, s, omega.dim))

        def at(L, ratio=ratio):
            return _pair_log_sup(ratio, _tensor_points(_geometric_axis(L, q), omega.dim))

        ok, log_c, _, _ = _ladder(at, box, levels)
        constants.append(math.exp(log_c) if ok else math.inf)
        flags.append(ok)
    first = next((r for r, ok in zip(r_grid, flags) if ok), None)
    verdict = "all" if all(flags) else ("some" if any(flags) else "none")
    scan = {"box": box, "levels": levels, "per_octave": q, "max_box": box * 2.0**levels}
    return PEsClassification(verdict, float(s), r_grid, tuple(constants), tuple(flags), first, scan)


def exponential_bounds(omega: Weight, box: float = 64.0, n: int = 4) -> float:
    """Smallest ``r`` with ``exp(-r|x|) <= omega(x)/omega(0) <= exp(r|x|)`` on the scan."""
    pts = _tensor_points(_geometric_axis(box, n), omega.dim)
    pts = pts[_norm(pts) > 0]
    logs = omega.log_evaluate(pts) - float(omega.log_evaluate(np.zeros(omega.dim)))
    return float(np.max(np.abs(logs) / _norm(pts)))


@dataclass(frozen=True)
class CompatibilityReport:
    constant: float
    log_constant: float
    argmax: tuple
    ladder: tuple

    @property
    def finite(self) -> bool:
        return math.isfinite(self.constant)

    def to_json(self) -> dict:
        return {
            "constant": self.constant if self.finite else "inf",
            "log_constant": self.log_constant,
            "argmax": [float(v) for v in self.argmax],
            "ladder": [[L, c] for L, c in self.ladder],
        }


def weight_compatibility(
    omega1: Weight,
    omega2: Weight,
    omega0: Weight,
    box: float = 8.0,
    n: int = 1,
    levels: int = 10,
) -> CompatibilityReport:
    """Sup of ``omega2(x, xi) / (omega1(y, eta) omega0(x, eta, xi - eta, y - x))``.

    Weights live on R^(2d) (``omega1``, ``omega2``) and R^(4d) (``omega0``).
    The scan runs over the 4d-dimensional box ladder; ``+inf`` signals that the
    ratio keeps growing with the box or overflows.
    """
    if omega1.dim != omega2.dim or omega0.dim != 2 * omega1.dim or omega1.dim % 2:
        raise InvalidDimensionError("need omega1, omega2 on R^(2d) and omega0 on R^(4d)")
    d = omega1.dim // 2

    def log_ratio(z):
        x, xi, y, eta = z[:, :d], z[:, d : 2 * d], z[:, 2 * d : 3 * d], z[:, 3 * d :]
        with np.errstate(invalid="ignore"):
            return (
                omega2._log(np.concatenate([x, xi], axis=1))
                - omega1._log(np.concatenate([y, eta], axis=1))
                - omega0._log(np.concatenate([x, eta, xi - eta, y - x], axis=1))
            )

    def at(L):
        pts = _tensor_points(_geometric_axis(L, n), 4 * d)
        best, arg = -np.inf, pts[0]
        for start in range(0, len(pts), 1 << 18):
            chunk = pts[start : start + (1 << 18)]
            vals = log_ratio(chunk)
            vals = np.where(np.isnan(vals), np.inf, vals)
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, arg = float(vals[i]), chunk[i].copy()
        return best, arg

    ok, log_c, arg, trail = _ladder(at, box, levels)
    const = math.exp(log_c) if ok else math.inf
    return CompatibilityReport(const, log_c, tuple(arg), tuple(trail))


# -- mollification ------------------------------------------------------------


def _multi_indices(dim: int, max_order: int):
    for order in range(max_order + 1):
        for alpha in itertools.product(range(order + 1), repeat=dim):
            if sum(alpha) == order:
                yield alpha


def _gaussian_derivative_1d(y: np.ndarray, c: float, k: int) -> np.ndarray:
    """``d^k/dy^k exp(-c y^2) = (-sqrt c)^k H_k(sqrt(c) y) exp(-c y^2)`` (physicists' Hermite)."""
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    u = math.sqrt(c) * y
    return (-math.sqrt(c)) ** k * np.polynomial.hermite.hermval(u, coeffs) * np.exp(-u * u)


@dataclass(frozen=True)
class MollifyReport:
    ratio_min: float
    ratio_max: float
    c: float
    s: float
    box: float
    step: float
    pad: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def mollify(
    omega: Weight,
    s: float = 1.0,
    c: float = 2.0,
    box: float = 8.0,
    step: float | None = None,
    max_order: int = 6,
) -> tuple[MollifiedWeight, MollifyReport]:
    """Smooth ``omega`` by convolution with the unit-mass Gaussian ``exp(-c|x|^2)``.

    Returns the tabulated ``omega_0 = omega * phi`` on ``[-box, box]^d`` (with
    exact derivative tables up to ``max_order``) and the sup/inf of
    ``omega_0 / omega`` over that box. The convolution is evaluated by FFT on
    a grid padded by ``8 / sqrt(c)`` on every side.
    """
    dim = omega.dim
    if step is None:
        step = (0.05 if dim == 1 else 0.1) / max(1.0, math.sqrt(c))
    pad_n = int(math.ceil(8.0 / math.sqrt(c) / step))
    inner_n = int(round(box / step))
    pad = pad_n * step
    ker_axis = step * np.arange(-pad_n, pad_n + 1)
    full_axis = step * np.arange(-(inner_n + pad_n), inner_n + pad_n + 1)
    inner_axis = step * np.arange(-inner_n, inner_n + 1)

    full_pts = _tensor_points(full_axis, dim)
    log_w = omega.log_evaluate(full_pts).reshape((len(full_axis),) * dim)
    shift = float(np.max(log_w))
    w_scaled = np.exp(log_w - shift)

    gauss_1d = np.exp(-c * ker_axis**2)
    mass_1d = float(np.sum(gauss_1d)) * step
    derivs = {}
    for alpha in _multi_indices(dim, max_order):
        kern = np.ones((1,) * dim)
        for k, a in enumerate(alpha):
            prof = _gaussian_derivative_1d(ker_axis, c, a) / mass_1d
            shape = [1] * dim
            shape[k] = len(ker_axis)
            kern = kern * prof.reshape(shape)
        conv = fftconvolve(w_scaled, kern, mode="valid") * step**dim
        derivs[alpha] = conv * math.exp(shift)

    base = derivs[(0,) * dim]
    inner_pts = _tensor_points(inner_axis, dim)
    log_inner = omega.log_evaluate(inner_pts).reshape(base.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.exp(np.log(np.abs(base)) - log_inner)
    rmin, rmax = float(np.min(ratio)), float(np.max(ratio))
    if not (np.all(base > 0) and 1e-6 <= rmin and rmax <= 1e6):
        raise MollificationDivergedError(f"omega_0/omega ranges over [{rmin:.3g}, {rmax:.3g}]")
    grid = UniformGrid(OrderedBasis.identity(dim), (len(inner_axis),) * dim, (step,) * dim, (inner_axis[0],) * dim)
    table = SampledField(grid, base)
    out = MollifiedWeight(table, derivatives=derivs, source=omega)
    return out, MollifyReport(rmin, rmax, c, s, box, step, pad)


# -- Gevrey envelope ----------------------------------------------------------


def _log_factorial(alpha) -> float:
    return float(sum(gammaln(a + 1) for a in alpha))


@dataclass(frozen=True)
class GevreyReport:
    """Envelope of ``|d^alpha f| / (alpha!^s omega)`` per order ``k = |alpha|``.

    ``log_envelope[k]`` is the log of the sup over x and |alpha| = k.
    ``C = exp(log_envelope[0])`` and ``h = max_k h_k`` with
    ``h_k = exp((log_envelope[k] - log C) / k)``, so that
    ``|d^alpha f| <= C h^k alpha!^s omega`` holds at every scanned sample.
    ``ls_log_h`` is the least-squares slope of the envelope over k >= 1.
    """

    s: float
    orders: tuple
    log_envelope: tuple
    h_per_order: tuple
    C: float
    h: float
    ls_log_h: float | None
    residuals: tuple
    order_passed: tuple
    growth_factor: float

    @property
    def passed(self) -> bool:
        return all(self.order_passed)

    @property
    def beurling_trend(self) -> bool:
        """Per-order rates ``h_k`` trend to zero (every-h reading).

        True when the rates vanish from some order on, or when the
        least-squares slope of ``log h_k`` against ``k`` is negative.
        """
        hs = list(self.h_per_order[1:])
        if not hs or hs[-1] == 0.0:
            return True
        if not all(math.isfinite(h) for h in hs):
            return False
        ks = [k for k, h in enumerate(hs, start=1) if h > 0]
        if len(ks) < 2:
            return True
        slope = float(np.polyfit(ks, [math.log(hs[k - 1]) for k in ks], 1)[0])
        return slope < 0.0

    def to_json(self) -> dict:
        def num(v):
            return v if v is None or math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "s": self.s,
            "orders": list(self.orders),
            "log_envelope": [num(v) for v in self.log_envelope],
            "h_per_order": [num(v) for v in self.h_per_order],
            "C": num(self.C),
            "h": num(self.h),
            "ls_log_h": num(self.ls_log_h),
            "residuals": [num(v) for v in self.residuals],
            "order_passed": list(self.order_passed),
            "passed": self.passed,
            "beurling_trend": self.beurling_trend,
        }


def envelope_fit(
    log_envelope: Sequence[float], s: float, growth_factor: float = 2.0
) -> GevreyReport:
    """Fit ``(C, h)`` to per-order log envelopes; see :class:`GevreyReport`."""
    env = np.array(log_envelope, dtype=float)
    K = len(env) - 1
    log_c = env[0]
    hk = [0.0]
    for k in range(1, K + 1):
        if env[k] == -np.inf or log_c == -np.inf:
            hk.append(0.0 if env[k] == -np.inf else math.inf)
        else:
            hk.append(math.exp((env[k] - log_c) / k))
    h = max(hk[1:]) if K else 0.0
    finite = [k for k in range(1, K + 1) if np.isfinite(env[k])]
    ls = None
    if len(finite) >= 2:
        ks = np.array(finite, dtype=float)
        ls = float(np.polyfit(ks, env[finite], 1)[0])
    if h > 0 and np.isfinite(log_c):
        line = log_c + np.arange(K + 1) * math.log(h)
        resid = tuple(float(v) for v in env - line)
    else:
        resid = tuple(0.0 if k == 0 else (-math.inf if env[k] == -np.inf else math.inf) for k in range(K + 1))
    ref_span = hk[1 : max(2, (K + 1) // 2 + 1)]
    h_ref = max(ref_span) if ref_span else 0.0
    passed = [bool(np.isfinite(env[0]) or env[0] == -np.inf)]
    for k in range(1, K + 1):
        passed.append(bool(np.isfinite(hk[k]) and hk[k] <= growth_factor * h_ref + 1e-300))
    return GevreyReport(
        float(s),
        tuple(range(K + 1)),
        tuple(float(v) for v in env),
        tuple(hk),
        math.exp(log_c) if np.isfinite(log_c) else 0.0,
        h,
        ls,
        resid,
        tuple(passed),
        growth_factor,
    )


def _log_envelope_from_derivatives(deriv_of, points, omega: Weight, s: float, dim: int, max_order: int, rel_floor: float):
    """``deriv_of(alpha)`` returns ``(values, noise)``; samples under the noise level are dropped."""
    log_w = omega.log_evaluate(points)
    scale0 = float(np.max(np.abs(deriv_of((0,) * dim)[0])))
    env = []
    for k in range(max_order + 1):
        best = -np.inf
        for alpha in _multi_indices(dim, k):
            if sum(alpha) != k:
                continue
            vals, noise = deriv_of(alpha)
            mag = np.abs(vals)
            peak = float(np.max(mag)) if mag.size else 0.0
            if peak == 0.0:
                continue
            mask = mag >= max(rel_floor * max(peak, scale0), noise)
            if not np.any(mask):
                continue
            with np.errstate(divide="ignore"):
                vals = np.log(mag[mask]) - log_w[mask] - s * _log_factorial(alpha)
            best = max(best, float(np.max(vals)))
        env.append(best)
    return env


def gevrey_derivative_check(
    f,
    omega: Weight,
    s: float,
    max_order: int = 6,
    rel_floor: float = 1e-10,
    growth_factor: float = 2.0,
    spectral_noise: float = 1e-12,
) -> GevreyReport:
    """Envelope fit of ``|d^alpha f(x)| <~ h^|alpha| alpha!^s omega(x)``.

    ``f`` is a :class:`SampledField` (derivatives by filtered spectral
    differentiation) or a :class:`MollifiedWeight` (exact derivative tables).
    Samples where ``|d^alpha f|`` is below ``rel_floor`` times the larger of its
    own maximum and ``max|f|`` are treated as numerical zero and excluded from
    the supremum, as are samples below ``spectral_noise * amplification * max|f|``
    (the roundoff level of spectral differentiation).
    """
    if max_order > 12:
        raise ValueError("max_order is limited to 12")
    if isinstance(f, MollifiedWeight):
        grid = f.table.grid
        if f.max_order < max_order:
            raise ValueError(f"mollified weight carries derivatives up to order {f.max_order}")

        def deriv_of(alpha):
            return f.derivative_table(alpha), 0.0

    else:
        grid = f.grid
        cache = {}

        scale = float(np.max(np.abs(f.values)))

        def deriv_of(alpha):
            if alpha not in cache:
                vals, amp = spectral_derivative(f.values, grid, alpha, return_amplification=True)
                cache[alpha] = (vals, spectral_noise * amp * scale)
            return cache[alpha]

    if omega.dim != grid.dim:
        raise InvalidDimensionError("weight and field dimensions differ")
    env = _log_envelope_from_derivatives(deriv_of, grid.points(), omega, s, grid.dim, max_order, rel_floor)
    return envelope_fit(env, s, growth_factor)


SHIPPED_WEIGHTS = {
    "one": one(1),
    "poly1": Polynomial(1.0),
    "poly2": Polynomial(2.0),
    "poly3": Polynomial(3.0),
    "poly_neg1": Polynomial(-1.0),
    "exp1": ExpPower(1.0, 1.0),
    "exp_half_s2": ExpPower(0.5, 2.0),
    "exp_0.2_s2": ExpPower(0.2, 2.0),
    "exp_neg_0.5": ExpPower(-0.5, 1.0),
}
