"""Symbols, the operators ``Op_A(a)``, quantization changes and symbol-class diagnostics.

``Op_A(a) f(x) = (2 pi)^{-d} \\iint a(x - A(x - y), xi) f(y) exp(i <x - y, xi>) dy dxi``

Closed-form symbols are sympy expressions in real variables ``x1..xd`` and
``xi1..xid`` (``x`` and ``xi`` when ``d = 1``). Sampled symbols are fields on
the phase-space grid of a signal grid, position axes first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import (
    AlignmentError,
    ConfigurationError,
    InvalidFieldError,
    MemoryGuardError,
    RefusedConversionError,
    UnsupportedMethodError,
)
from .lattice import (
    QuantizationSpec,
    SampledField,
    UniformGrid,
    fourier_transform,
    inverse_fourier,
)
from .stft import MAX_ENTRIES, Window, stft, stft_decay_fit
from .weights import (
    GevreyReport,
    Weight,
    _log_envelope_from_derivatives,
    envelope_fit,
    gevrey_derivative_check,
    weight_from_json,
)

__all__ = [
    "Symbol",
    "ClosedFormSymbol",
    "SampledSymbol",
    "symbol_variables",
    "symbol_from_json",
    "apply_op",
    "change_quantization",
    "adjoint_symbol",
    "GammaReport",
    "gamma_membership",
    "InvarianceReport",
    "quantization_invariance_check",
    "symbol_to_field",
    "symbol_from_field",
]

SERIES_CAP = 64


def symbol_variables(d: int) -> tuple[tuple, tuple]:
    """Real sympy symbols ``(x-variables, xi-variables)``."""
    if d == 1:
        return (sp.Symbol("x", real=True),), (sp.Symbol("xi", real=True),)
    xs = tuple(sp.Symbol(f"x{k + 1}", real=True) for k in range(d))
    xis = tuple(sp.Symbol(f"xi{k + 1}", real=True) for k in range(d))
    return xs, xis


class Symbol:
    """Common interface: sampling on a phase-space grid."""

    d: int
    envelope: Weight | None
    s: float | None

    def sample(self, grid: UniformGrid) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ClosedFormSymbol(Symbol):
    """Symbol given by an exact expression; evaluates anywhere without interpolation."""

    expr: sp.Expr
    d: int = 1
    kind: str = "expression"
    params: dict = field(default_factory=dict)
    envelope: Weight | None = None
    s: float | None = None

    def __post_init__(self):
        xs, xis = symbol_variables(self.d)
        extra = self.expr.free_symbols - set(xs) - set(xis)
        if extra:
            raise ConfigurationError(f"unknown symbol variables {sorted(map(str, extra))}")
        object.__setattr__(self, "_fn", sp.lambdify(xs + xis, self.expr, modules="numpy"))

    # constructors -------------------------------------------------------------

    @classmethod
    def constant(cls, c, d: int = 1, **kw) -> "ClosedFormSymbol":
        return cls(sp.sympify(c), d, "constant", {"c": _jsonable(c)}, **kw)

    @classmethod
    def parse(cls, text: str, d: int = 1, **kw) -> "ClosedFormSymbol":
        xs, xis = symbol_variables(d)
        names = {str(v): v for v in xs + xis}
        names.update({"I": sp.I, "pi": sp.pi, "E": sp.E})
        expr = sp.sympify(text, locals=names)
        return cls(expr, d, "expression", {"expr": text}, **kw)

    @classmethod
    def separable(cls, u: str, w: str, d: int = 1, **kw) -> "ClosedFormSymbol":
        ux = cls.parse(u, d).expr
        wx = cls.parse(w, d).expr
        xs, xis = symbol_variables(d)
        if ux.free_symbols & set(xis) or wx.free_symbols & set(xs):
            raise ConfigurationError("separable factors must depend on x and xi respectively")
        return cls(ux * wx, d, "separable", {"u": u, "w": w}, **kw)

    @classmethod
    def gaussian_envelope(cls, center=None, widths=None, d: int = 1, **kw) -> "ClosedFormSymbol":
        """``exp(-sum_k (z_k - c_k)^2 / (2 w_k^2))`` over ``z = (x, xi)``."""
        xs, xis = symbol_variables(d)
        center = [0.0] * (2 * d) if center is None else [float(c) for c in center]
        widths = [1.0] * (2 * d) if widths is None else [float(w) for w in widths]
        if len(center) != 2 * d or len(widths) != 2 * d or min(widths) <= 0:
            raise ConfigurationError("gaussian envelope needs 2d centers and positive widths")
        z = xs + xis
        expo = sum((v - sp.nsimplify(c)) ** 2 / (2 * sp.nsimplify(w) ** 2) for v, c, w in zip(z, center, widths))
        return cls(sp.exp(-expo), d, "gaussian_envelope", {"center": center, "widths": widths}, **kw)

    # evaluation ---------------------------------------------------------------

    def evaluate(self, x, xi) -> np.ndarray:
        """Values at ``x``, ``xi`` (broadcast together).

        For ``d = 1`` these are plain coordinate arrays; otherwise the last
        axis has length ``d``.
        """
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.d == 1:
            x, xi = x[..., None], xi[..., None]
        x, xi = np.broadcast_arrays(x, xi)
        args = [x[..., k] for k in range(self.d)] + [xi[..., k] for k in range(self.d)]
        with np.errstate(all="ignore"):
            out = self._fn(*args)
        return np.broadcast_to(np.asarray(out, dtype=complex), x.shape[:-1]).copy()

    def sample(self, grid: UniformGrid) -> np.ndarray:
        pts = grid.points()
        if self.d == 1:
            return self.evaluate(pts[..., 0], pts[..., 1])
        return self.evaluate(pts[..., : self.d], pts[..., self.d :])

    @property
    def variables(self):
        return symbol_variables(self.d)

    def depends_on_x(self) -> bool:
        return bool(self.expr.free_symbols & set(self.variables[0]))

    def depends_on_xi(self) -> bool:
        return bool(self.expr.free_symbols & set(self.variables[1]))

    def with_expr(self, expr, kind: str | None = None) -> "ClosedFormSymbol":
        kind = kind or ("constant" if not expr.free_symbols else "expression")
        params = {"c": _jsonable(complex(expr))} if kind == "constant" else {"expr": str(expr)}
        return ClosedFormSymbol(expr, self.d, kind, params, self.envelope, self.s)

    def descriptor(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "expr": str(self.expr), **self.params}
        if self.envelope is not None:
            out["envelope"] = self.envelope.to_json()
        if self.s is not None:
            out["s"] = self.s
        return out


@dataclass(frozen=True, eq=False)
class SampledSymbol(Symbol):
    """Symbol samples on a phase-space grid (``d`` position axes, then ``d`` frequency axes)."""

    field: SampledField
    nondecaying: bool = False
    envelope: Weight | None = None
    s: float | None = None

    @property
    def d(self) -> int:
        return self.field.grid.dim // 2

    def sample(self, grid: UniformGrid) -> np.ndarray:
        if not self.field.grid.matches(grid):
            raise AlignmentError("sampled symbol lives on a different phase-space grid")
        return np.array(self.field.values)

    def boundary_level(self) -> float:
        """Largest boundary magnitude relative to the overall maximum."""
        mag = np.abs(self.field.values)
        peak = float(np.max(mag))
        if peak == 0.0:
            return 0.0
        edge = 0.0
        for k in range(mag.ndim):
            edge = max(edge, float(np.max(np.take(mag, 0, axis=k))), float(np.max(np.take(mag, -1, axis=k))))
        return edge / peak

    def descriptor(self) -> dict:
        out = {"kind": "sampled", "d": self.d, "nondecaying": self.nondecaying}
        if self.envelope is not None:
            out["envelope"] = self.envelope.to_json()
        if self.s is not None:
            out["s"] = self.s
        return out


def _jsonable(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


def symbol_from_json(obj: dict) -> ClosedFormSymbol:
    """``{"kind": "constant"|"expression"|"separable"|"gaussian_envelope", ...}``."""
    d = int(obj.get("d", 1))
    kw = {}
    if obj.get("envelope"):
        kw["envelope"] = weight_from_json(obj["envelope"])
    if obj.get("s") is not None:
        kw["s"] = float(obj["s"])
    kind = obj.get("kind", "expression")
    if kind == "constant":
        c = obj.get("c", 1.0)
        c = complex(c[0], c[1]) if isinstance(c, list) else c
        return ClosedFormSymbol.constant(c, d, **kw)
    if kind == "expression":
        return ClosedFormSymbol.parse(obj["expr"], d, **kw)
    if kind == "separable":
        return ClosedFormSymbol.separable(obj["u"], obj["w"], d, **kw)
    if kind == "gaussian_envelope":
        return ClosedFormSymbol.gaussian_envelope(obj.get("center"), obj.get("widths"), d, **kw)
    raise ConfigurationError(f"unknown symbol kind {kind!r}")


# -- operators ------------------------------------------------------------------


def _check_signal(f: SampledField) -> None:
    if not f.grid.basis.is_identity:
        raise AlignmentError("signals must live on the standard grid")


def _op0_fast(a_vals: np.ndarray, f: SampledField) -> np.ndarray:
    """``(2 pi)^{-d/2} sum_m a(x_j, xi_m) fhat(xi_m) exp(i x_j xi_m) dxi``."""
    g = f.grid
    d = g.dim
    F = fourier_transform(f)
    x = g.points().reshape(-1, d)
    xi = F.grid.points().reshape(-1, d)
    A = a_vals.reshape(x.shape[0], xi.shape[0])
    phase = np.exp(1j * (x @ xi.T))
    dxi = float(np.prod(F.grid.steps))
    out = np.einsum("jm,m,jm->j", A, F.values.ravel(), phase) * dxi * (2 * math.pi) ** (-d / 2)
    return out.reshape(g.shape)


def _op_quadrature(a: Symbol, A: np.ndarray, f: SampledField) -> np.ndarray:
    g = f.grid
    if g.dim != 1:
        raise UnsupportedMethodError("quadrature is available in one dimension only")
    if g.counts[0] > 512:
        raise UnsupportedMethodError("quadrature is limited to N <= 512")
    alpha = float(A[0, 0])
    y = g.axes()[0]
    xi = g.reciprocal().axes()[0]
    h, dxi = g.steps[0], g.reciprocal().steps[0]
    out = np.empty(g.counts[0], dtype=complex)
    if isinstance(a, SampledSymbol):
        vals = a.sample(g.phase_space())
        if alpha not in (0.0, 1.0):
            raise UnsupportedMethodError("sampled symbols need A = 0 or A = 1 for quadrature")
    for j, xj in enumerate(y):
        if isinstance(a, SampledSymbol):
            rows = vals[j][None, :] if alpha == 0.0 else vals
            sym = np.broadcast_to(rows, (len(y), len(xi)))
        else:
            z = xj - alpha * (xj - y)
            sym = a.evaluate(z[:, None], xi[None, :])
        kern = np.exp(1j * np.outer(xj - y, xi))
        out[j] = np.sum(sym * kern * f.values[:, None])
    return out * h * dxi / (2 * math.pi)


def apply_op(a: Symbol, A: QuantizationSpec, f: SampledField, method: str = "fast") -> SampledField:
    """Apply ``Op_A(a)`` to ``f``.

    ``method="fast"`` converts ``a`` to ``A = 0`` and uses one transform of
    ``f``; ``method="quadrature"`` evaluates the double sum directly in one
    dimension (cost ``O(N^3)``) and serves as the slow reference.
    """
    _check_signal(f)
    if A.dim != f.grid.dim or a.d != f.grid.dim:
        raise AlignmentError("symbol, quantization and signal dimensions differ")
    if method == "quadrature":
        return SampledField(f.grid, _op_quadrature(a, A.matrix, f))
    if method != "fast":
        raise UnsupportedMethodError(f"unknown method {method!r}")
    if isinstance(a, ClosedFormSymbol) and not a.expr.free_symbols:
        # Op_A(c) = c I for every A; skipping the transform avoids roundoff tails
        return f.with_values(complex(a.expr) * f.values)
    ps = f.grid.phase_space()
    if ps.size > MAX_ENTRIES:
        raise MemoryGuardError("symbol samples exceed the 2^26 guard")
    a0 = a if A.is_zero else change_quantization(a, A, QuantizationSpec.kohn_nirenberg(A.dim), grid=ps)
    return SampledField(f.grid, _op0_fast(a0.sample(ps), f))


# -- quantization changes -----------------------------------------------------


def _series(expr, dA: np.ndarray, xs, xis):
    """``exp(-i sum dA_jk d_xi_k d_x_j) expr`` if the series terminates, else None."""
    if not (expr.is_polynomial(*xs) or expr.is_polynomial(*xis)):
        return None
    pairs = [(float(dA[j, k]), xs[j], xis[k]) for j in range(len(xs)) for k in range(len(xis)) if dA[j, k] != 0]
    total = expr
    term = expr
    for n in range(1, SERIES_CAP + 1):
        term = sp.expand(sum(sp.nsimplify(c) * sp.diff(term, xv, xiv) for c, xv, xiv in pairs))
        if term == 0:
            return sp.expand(total)
        total = total + (-sp.I) ** n / sp.factorial(n) * term
    return None


def _sampled_change(vals: np.ndarray, grid: UniformGrid, dA: np.ndarray) -> np.ndarray:
    d = grid.dim // 2
    F = fourier_transform(SampledField(grid, vals))
    dual = F.grid.points()
    X, Xi = dual[..., :d], dual[..., d:]
    mult = np.exp(1j * np.einsum("...j,jk,...k->...", X, dA, Xi))
    return inverse_fourier(F.with_values(F.values * mult)).values


def change_quantization(
    a: Symbol,
    A1: QuantizationSpec,
    A2: QuantizationSpec,
    grid: UniformGrid | None = None,
    decay_tol: float = 1e-10,
) -> Symbol:
    """Symbol ``a2`` with ``Op_{A2}(a2) = Op_{A1}(a)``.

    Closed forms use the terminating series of the mixed-derivative
    exponential when available and are returned unchanged when they depend on
    only one of the variable groups. Otherwise the symbol is sampled on
    ``grid`` (a phase-space grid) and converted by a Fourier multiplier, which
    requires decay at the box boundary.

    Raises
    ------
    RefusedConversionError
        The samples do not decay, so the periodic multiplier would alias.
    """
    dA = A1.matrix - A2.matrix
    if not np.any(dA):
        return a
    if isinstance(a, ClosedFormSymbol):
        if not (a.depends_on_x() and a.depends_on_xi()):
            return a
        xs, xis = a.variables
        res = _series(a.expr, dA, xs, xis)
        if res is not None:
            return a.with_expr(res)
        if grid is None:
            raise ConfigurationError("non-polynomial closed form needs a phase-space grid for conversion")
        sampled = SampledSymbol(SampledField(grid, a.sample(grid)), envelope=a.envelope, s=a.s)
    elif isinstance(a, SampledSymbol):
        sampled = a
        if grid is not None and not a.field.grid.matches(grid):
            raise AlignmentError("sampled symbol lives on a different phase-space grid")
    else:
        raise ConfigurationError("unknown symbol type")
    if sampled.nondecaying or sampled.boundary_level() > decay_tol:
        raise RefusedConversionError(
            f"symbol does not decay at the box boundary (level {sampled.boundary_level():.3g})"
        )
    g = sampled.field.grid
    vals = _sampled_change(sampled.field.values, g, dA)
    return SampledSymbol(SampledField(g, vals), envelope=sampled.envelope, s=sampled.s)


def adjoint_symbol(a: Symbol, grid: UniformGrid | None = None) -> Symbol:
    """Symbol ``b`` with ``Op_0(a)^* = Op_0(b)``, namely ``exp(i<D_xi, D_x>) conj(a)``."""
    if isinstance(a, ClosedFormSymbol):
        conj = a.with_expr(sp.expand(sp.conjugate(a.expr)), a.kind if a.kind == "constant" else None)
    else:
        conj = SampledSymbol(a.field.with_values(np.conj(a.field.values)), a.nondecaying, a.envelope, a.s)
    d = a.d
    return change_quantization(conj, QuantizationSpec(np.eye(d)), QuantizationSpec.kohn_nirenberg(d), grid=grid)


# -- symbol classes -----------------------------------------------------------


@dataclass(frozen=True)
class GammaReport:
    """Outcome of a symbol-class diagnostic.

    ``verdict`` is ``"Beurling-trend"`` (fits and the constants keep improving),
    ``"Roumieu-consistent"`` (a finite fit exists) or ``"inconsistent"``.
    """

    mode: str
    verdict: str
    C: float
    rate: float
    roumieu: bool
    beurling_trend: bool
    details: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.roumieu

    def to_json(self) -> dict:
        num = lambda v: v if math.isfinite(v) else ("inf" if v > 0 else "-inf")  # noqa: E731
        return {
            "mode": self.mode,
            "verdict": self.verdict,
            "C": num(self.C),
            "rate": num(self.rate),
            "roumieu": self.roumieu,
            "beurling_trend": self.beurling_trend,
            "details": self.details,
        }


def _verdict(roumieu: bool, beurling: bool) -> str:
    if not roumieu:
        return "inconsistent"
    return "Beurling-trend" if beurling else "Roumieu-consistent"


def _closed_form_envelope(a: ClosedFormSymbol, omega0: Weight, s: float, grid: UniformGrid, max_order: int):
    variables = a.variables[0] + a.variables[1]
    pts = grid.points()
    cache = {}

    def deriv_of(alpha):
        if alpha not in cache:
            expr = a.expr
            for v, k in zip(variables, alpha):
                if k:
                    expr = sp.diff(expr, v, k)
            if expr == 0:
                cache[alpha] = (np.zeros(grid.shape), 0.0)
            else:
                fn = sp.lambdify(variables, expr, modules="numpy")
                with np.errstate(all="ignore"):
                    vals = np.asarray(fn(*np.moveaxis(pts, -1, 0)), dtype=complex)
                cache[alpha] = (np.broadcast_to(vals, grid.shape), 0.0)
        return cache[alpha]

    return _log_envelope_from_derivatives(deriv_of, pts, omega0, s, grid.dim, max_order, 1e-10)


def gamma_membership(
    a: Symbol,
    omega0: Weight,
    s: float,
    mode: str = "derivative",
    L: float = 8.0,
    N: int = 32,
    max_order: int = 6,
    sigma: float = 1.0,
) -> GammaReport:
    """Test ``|d^alpha a| <~ C h^|alpha| alpha!^s omega0`` on a phase-space box.

    ``mode="derivative"`` fits ``(C, h)`` to exact (closed forms) or spectral
    (sampled) derivatives on ``[-L, L]^{2d}`` with ``N`` samples per axis.
    ``mode="stft"`` transforms the symbol over ``R^{2d}`` with a Gaussian
    window and fits ``|V a(X, Xi)| <~ C omega0(X) exp(-r |Xi|^(1/s))`` on the
    inner half of the box; in that mode the Beurling trend means the local
    decay rate does not fall off at high frequency.
    """
    if omega0.dim != 2 * a.d:
        raise ConfigurationError("the envelope weight lives on phase space")
    if mode == "derivative":
        if isinstance(a, SampledSymbol):
            rep: GevreyReport = gevrey_derivative_check(a.field, omega0, s, max_order)
            grid_meta = a.field.grid.to_dict()
        else:
            grid = UniformGrid.box(L, N, 2 * a.d)
            env = _closed_form_envelope(a, omega0, s, grid, max_order)
            rep = envelope_fit(env, s)
            grid_meta = grid.to_dict()
        roumieu = rep.passed and math.isfinite(rep.h) and rep.C > 0
        beur = roumieu and rep.beurling_trend
        return GammaReport("derivative", _verdict(roumieu, beur), rep.C, rep.h, roumieu, beur,
                           {"gevrey": rep.to_json(), "grid": grid_meta})
    if mode != "stft":
        raise UnsupportedMethodError(f"unknown mode {mode!r}")
    if a.d != 1:
        raise UnsupportedMethodError("stft mode is limited to d = 1")
    if N > 48:
        raise MemoryGuardError("stft mode allows at most 48 samples per axis")
    if isinstance(a, SampledSymbol):
        fld = a.field
    else:
        grid = UniformGrid.box(L, N, 2)
        fld = SampledField(grid, a.sample(grid))
    S = stft(fld, Window.gaussian(sigma, 2))
    pts = S.field.grid.points()
    half = 0.5 * max(abs(o) for o in fld.grid.offsets)
    mask = np.all(np.abs(pts[..., :2]) <= half + 1e-12, axis=-1)
    fit = stft_decay_fit(S, omega0, s, mask=mask)
    roumieu = math.isfinite(fit.C) and fit.r > 0
    rates = fit.decay_rates
    tail = rates[len(rates) // 2 :]
    beur = roumieu and len(tail) >= 2 and all(b >= a_ * (1 - 0.05) for a_, b in zip(tail, tail[1:]))
    return GammaReport("stft", _verdict(roumieu, beur), fit.C, fit.r, roumieu, beur,
                       {"fit": fit.to_json(), "grid": fld.grid.to_dict()})


@dataclass(frozen=True)
class InvarianceReport:
    quantizations: tuple
    reports: tuple

    @property
    def verdicts(self) -> tuple:
        return tuple(r.verdict for r in self.reports)

    @property
    def consistent_agree(self) -> bool:
        return len({r.consistent for r in self.reports}) == 1

    @property
    def agree(self) -> bool:
        return len(set(self.verdicts)) == 1

    def to_json(self) -> dict:
        return {
            "quantizations": [list(map(list, A)) for A in self.quantizations],
            "verdicts": list(self.verdicts),
            "agree": self.agree,
            "reports": [r.to_json() for r in self.reports],
        }


def quantization_invariance_check(
    a: Symbol,
    omega0: Weight,
    s: float,
    A_list,
    A0: QuantizationSpec | None = None,
    grid: UniformGrid | None = None,
    **kw,
) -> InvarianceReport:
    """Run :func:`gamma_membership` on ``a`` rewritten in every quantization of ``A_list``.

    ``a`` is taken in quantization ``A0`` (default Kohn-Nirenberg). Sampled
    conversions use ``grid`` (default: the phase space of a 64-point box of
    half-width 8).
    """
    A0 = QuantizationSpec.kohn_nirenberg(a.d) if A0 is None else A0
    grid = UniformGrid.box(8.0, 64, a.d).phase_space() if grid is None else grid
    reports = []
    for A in A_list:
        A = A if isinstance(A, QuantizationSpec) else QuantizationSpec(A)
        reports.append(gamma_membership(change_quantization(a, A0, A, grid=grid), omega0, s, **kw))
    return InvarianceReport(tuple(A.A if isinstance(A, QuantizationSpec) else QuantizationSpec(A).A for A in A_list),
                            tuple(reports))


# -- serialization ------------------------------------------------------------


def symbol_to_field(a: Symbol, grid: UniformGrid | None = None) -> tuple[SampledField, dict]:
    """Samples plus the ``SYMB`` metadata block."""
    if isinstance(a, SampledSymbol):
        return a.field, {"SYMB": a.descriptor()}
    if grid is None:
        raise ConfigurationError("closed-form symbols need a grid to be sampled")
    return SampledField(grid, a.sample(grid)), {"SYMB": a.descriptor()}


def symbol_from_field(f: SampledField, blocks: dict) -> Symbol:
    """Rebuild a symbol; closed-form descriptors win over the samples."""
    desc = blocks.get("SYMB", {})
    if desc.get("kind") not in (None, "sampled"):
        return symbol_from_json(desc)
    if f.grid.dim % 2:
        raise InvalidFieldError("symbol fields live on an even-dimensional phase space")
    env = weight_from_json(desc["envelope"]) if desc.get("envelope") else None
    return SampledSymbol(f, bool(desc.get("nondecaying", False)), env, desc.get("s"))
