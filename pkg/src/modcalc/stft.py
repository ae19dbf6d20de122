"""Windows, the short-time Fourier transform and its inverse, window diagnostics.

Convention (kept at the phase level)::

    V_phi f(x, xi) = (2 pi)^{-d/2} \\int f(y) conj(phi(y - x)) exp(-i <y, xi>) dy

and the synthesis used by :func:`istft`::

    f(y) = (2 pi)^{-d/2} ||phi||^{-2} \\iint V_phi f(x, eta) phi(y - x) exp(i <y, eta>) dx deta
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import (
    InvalidFieldError,
    InvalidWindowError,
    MemoryGuardError,
    UndefinedFitError,
    UnsupportedBasisError,
)
from .lattice import OrderedBasis, SampledField, UniformGrid, dft_axes, spectral_derivative
from .weights import Weight, _multi_indices

__all__ = [
    "Window",
    "Spectrogram",
    "DecayFit",
    "hermite_function",
    "stft",
    "istft",
    "gs_seminorm",
    "stft_decay_fit",
    "PHASE_CONVENTION",
]

PHASE_CONVENTION = "exp(-i<y,xi>)"
MAX_ENTRIES = 1 << 26


def hermite_function(n: int, x) -> np.ndarray:
    """L^2-normalized Hermite function of order ``n`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = math.pi**-0.25 * np.exp(-0.5 * x * x)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
    return cur


@dataclass(frozen=True, eq=False)
class Window:
    """Analysis/synthesis window.

    ``kind`` is ``"gaussian"``, ``"hermite"`` or ``"tabulated"``. Analytic
    kinds are unit-L^2 tensor products of ``psi_n(x_k / sigma) / sqrt(sigma)``
    (``n = 0`` is the Gaussian). Tabulated windows are looked up on their own
    lattice and vanish outside it.
    """

    kind: str
    sigma: float = 1.0
    orders: tuple = (0,)
    table: SampledField | None = None
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in ("gaussian", "hermite", "tabulated"):
            raise InvalidWindowError(f"unknown window kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table is None:
                raise InvalidWindowError("tabulated window needs a table")
            if self.table.l2_norm() <= 1e-12:
                raise InvalidWindowError("window has zero norm")
            if not self.table.grid.basis.is_identity:
                raise UnsupportedBasisError("tabulated windows live on the standard basis")
        elif not self.sigma > 0:
            raise InvalidWindowError("window width must be positive")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, dim: int = 1) -> "Window":
        return cls("gaussian", float(sigma), (0,) * dim)

    @classmethod
    def hermite(cls, order, sigma: float = 1.0, dim: int = 1) -> "Window":
        orders = tuple(order) if np.ndim(order) else (int(order),) + (0,) * (dim - 1)
        return cls("hermite", float(sigma), orders)

    @classmethod
    def tabulated(cls, table: SampledField, normalize: bool = True) -> "Window":
        if normalize:
            nrm = table.l2_norm()
            if nrm <= 1e-12:
                raise InvalidWindowError("window has zero norm")
            table = table.with_values(table.values / nrm)
        return cls("tabulated", table=table, orders=(0,) * table.grid.dim, normalized=normalize)

    @property
    def dim(self) -> int:
        return len(self.orders)

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        if self.kind == "tabulated":
            g = self.table.grid
            raw = (pts - np.array(g.offsets)) / np.array(g.steps)
            idx = np.rint(raw)
            if np.any(np.abs(raw - idx) > 1e-6):
                raise InvalidWindowError("tabulated window evaluated off its lattice")
            idx = idx.astype(int)
            inside = np.all((idx >= 0) & (idx < np.array(g.counts)), axis=-1)
            clipped = np.clip(idx, 0, np.array(g.counts) - 1)
            vals = self.table.values[tuple(np.moveaxis(clipped, -1, 0))]
            return np.where(inside, vals, 0.0)
        out = np.ones(pts.shape[:-1], dtype=complex)
        for k, n in enumerate(self.orders):
            out = out * hermite_function(n, pts[..., k] / self.sigma) / math.sqrt(self.sigma)
        return out

    def evaluate_axis(self, k: int, t) -> np.ndarray:
        """One-dimensional factor along axis ``k`` (analytic kinds only)."""
        return hermite_function(self.orders[k], np.asarray(t, dtype=float) / self.sigma) / math.sqrt(self.sigma)

    def fourier(self, eta) -> np.ndarray:
        """Closed-form Fourier transform (analytic kinds)."""
        if self.kind == "tabulated":
            raise InvalidWindowError("closed-form transform only for analytic windows")
        pts = np.asarray(eta, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        out = np.ones(pts.shape[:-1], dtype=complex)
        for k, n in enumerate(self.orders):
            out = out * (-1j) ** n * math.sqrt(self.sigma) * hermite_function(n, self.sigma * pts[..., k])
        return out

    def norm(self) -> float:
        if self.kind == "tabulated":
            return self.table.l2_norm()
        return 1.0

    def decay_metadata(self, L: float = 12.0, n: int = 2001) -> float:
        """``sup |phi(x)| exp(|x| / sigma)`` along the axes of ``[-L, L]^d``."""
        if self.kind == "tabulated":
            return math.nan
        t = np.linspace(-L, L, n)
        prof = np.abs(self.evaluate_axis(0, t)) * np.exp(np.abs(t) / self.sigma)
        return float(np.max(prof))

    def to_json(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated", "grid": self.table.grid.to_dict()}
        return {"kind": self.kind, "sigma": self.sigma, "orders": list(self.orders)}


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """``V_phi f`` on the phase-space grid (position axes first, then frequency)."""

    field: SampledField
    window: Window
    signal_grid: UniformGrid
    stride: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.signal_grid.dim

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def block(self) -> dict:
        return {
            "window": self.window.to_json(),
            "stride": self.stride,
            "phase_convention": PHASE_CONVENTION,
            "signal_grid": self.signal_grid.to_dict(),
            **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))},
        }


def _window_differences(window: Window, grid: UniformGrid, x_idx: list[np.ndarray]) -> np.ndarray:
    """``phi(y_k - x_j)`` for all lattice pairs, shape ``(Nj..., Nk...)``."""
    d = grid.dim
    if window.kind != "tabulated":
        out = None
        for k in range(d):
            n = grid.counts[k]
            diff = (np.arange(n)[None, :] - x_idx[k][:, None]) * grid.steps[k]
            prof = window.evaluate_axis(k, diff)
            shape = [1] * (2 * d)
            shape[k] = len(x_idx[k])
            shape[d + k] = n
            prof = prof.reshape(shape)
            out = prof if out is None else out * prof
        return out.astype(complex)
    tg = window.table.grid
    if any(abs(a - b) > 1e-12 * max(a, b) for a, b in zip(tg.steps, grid.steps)):
        raise InvalidWindowError("tabulated window step differs from the signal step")
    axes = []
    for k in range(d):
        n = grid.counts[k]
        diff = (np.arange(n)[None, :] - x_idx[k][:, None]) * grid.steps[k]
        shape = [1] * (2 * d)
        shape[k] = len(x_idx[k])
        shape[d + k] = n
        axes.append(np.broadcast_to(diff.reshape(shape), tuple(len(x_idx[i]) for i in range(d)) + grid.counts))
    pts = np.stack(np.broadcast_arrays(*axes), axis=-1)
    return window.evaluate(pts)


def stft(f: SampledField, window: Window, stride: int = 1) -> Spectrogram:
    """Full- or sub-strided STFT of ``f`` on its phase-space grid."""
    g = f.grid
    if not g.basis.is_identity:
        raise UnsupportedBasisError("STFT requires the standard basis")
    if window.dim != g.dim:
        raise InvalidWindowError("window and signal dimensions differ")
    if window.norm() <= 1e-12:
        raise InvalidWindowError("window has zero norm")
    if any(n % stride for n in g.counts):
        raise InvalidFieldError("stride must divide the sample counts")
    d = g.dim
    x_idx = [np.arange(0, n, stride) for n in g.counts]
    entries = int(np.prod([len(i) for i in x_idx])) * g.size
    if entries > MAX_ENTRIES:
        raise MemoryGuardError(f"spectrogram with {entries} entries exceeds the 2^26 guard")
    w = _window_differences(window, g, x_idx)
    seg = np.conj(w) * f.values.reshape((1,) * d + g.counts)
    rec = g.reciprocal()
    vals = dft_axes(seg, g.steps, g.offsets, rec.offsets, range(d, 2 * d))

    ps = UniformGrid(
        OrderedBasis.identity(2 * d),
        tuple(len(i) for i in x_idx) + rec.counts,
        tuple(h * stride for h in g.steps) + rec.steps,
        g.offsets + rec.offsets,
    )
    # window energy falling outside the box, per lattice point
    energy = np.sum(np.abs(w) ** 2, axis=tuple(range(d, 2 * d))) * float(np.prod(g.steps))
    leakage = float(np.max(np.abs(window.norm() ** 2 - energy))) if window.kind != "tabulated" else 0.0
    meta = {"window_leakage": leakage, "periodization_flag": bool(leakage > 1e-12)}
    return Spectrogram(SampledField(ps, vals), window, g, stride, meta)


def istft(S: Spectrogram, window: Window | None = None) -> SampledField:
    """Synthesize a signal from a spectrogram with ``window`` (default: the analysis window).

    The round trip is guaranteed only for the analysis window at stride 1
    (see :func:`round_trip_guaranteed`); other choices are approximate.
    """
    window = S.window if window is None else window
    g = S.signal_grid
    d = g.dim
    ps = S.field.grid
    inner = dft_axes(S.values, ps.steps[d:], ps.offsets[d:], g.offsets, range(d, 2 * d), inverse=True)
    x_idx = [np.arange(0, n, S.stride) for n in g.counts]
    w = _window_differences(window, g, x_idx)
    cell = float(np.prod(ps.steps[:d]))
    vals = np.sum(w * inner, axis=tuple(range(d))) * cell / window.norm() ** 2
    return SampledField(g, vals)


def round_trip_guaranteed(S: Spectrogram, window: Window | None) -> bool:
    return (window is None or window is S.window) and S.stride == 1


def gs_seminorm(
    f: SampledField,
    s: float,
    sigma: float,
    h: float,
    max_order: int = 6,
    rel_floor: float = 1e-10,
    spectral_noise: float = 1e-12,
) -> float:
    """Truncated ``sup |x^beta d^alpha f| / (h^|alpha+beta| alpha!^s beta!^sigma)``.

    The sup runs over ``|alpha|, |beta| <= max_order`` and the grid; samples at
    the roundoff level of spectral differentiation are ignored.
    """
    g = f.grid
    d = g.dim
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        return 0.0
    pts = g.points()
    log_h = math.log(h)
    best = -math.inf
    betas = list(_multi_indices(d, max_order))
    for alpha in _multi_indices(d, max_order):
        vals, amp = spectral_derivative(f.values, g, alpha, return_amplification=True)
        mag = np.abs(vals)
        peak = float(np.max(mag))
        if peak == 0.0:
            continue
        mask = mag >= max(rel_floor * max(peak, scale), spectral_noise * amp * scale)
        if not np.any(mask):
            continue
        log_d = np.log(mag[mask])
        x = pts[mask]
        la = s * sum(gammaln(a + 1) for a in alpha)
        for beta in betas:
            with np.errstate(divide="ignore"):
                log_xb = np.sum(np.array(beta) * np.log(np.abs(x)), axis=-1)
            lb = sigma * sum(gammaln(b + 1) for b in beta)
            val = float(np.max(log_d + log_xb)) - (sum(alpha) + sum(beta)) * log_h - la - lb
            best = max(best, val)
    return math.exp(best)


@dataclass(frozen=True)
class DecayFit:
    """``|V(x, xi)| <= C omega(x) exp(-r |xi|^(1/s))`` at every fitted sample.

    ``C`` defaults to the smallest admissible constant (the ``r = 0``
    envelope); ``r`` is then the largest rate compatible with it.
    ``sweep`` lists ``(r, C(r))`` with ``C(r)`` the smallest constant for that
    rate. ``decay_rates`` are slopes of the log-envelope between successive
    shells in ``|xi|^(1/s)``; nondecreasing rates indicate faster-than-any-rate
    decay.
    """

    C: float
    r: float
    s: float
    r_is_lower_bound: bool
    residual: np.ndarray = field(repr=False)
    sweep: tuple = ()
    decay_rates: tuple = ()

    def to_json(self) -> dict:
        return {
            "C": self.C,
            "r": self.r,
            "s": self.s,
            "r_is_lower_bound": self.r_is_lower_bound,
            "sweep": [list(p) for p in self.sweep],
            "decay_rates": list(self.decay_rates),
        }


def stft_decay_fit(
    S: Spectrogram | SampledField,
    omega: Weight,
    s: float,
    C: float | None = None,
    mask: np.ndarray | None = None,
    r_sweep=None,
    shells: int = 12,
    boundary_tol: float = 1e-10,
    noise_floor: float = 1e-12,
) -> DecayFit:
    """Fit the decay estimate to a spectrogram (or any phase-space field).

    ``omega`` is evaluated on the position block, ``|xi|^(1/s)`` on the
    frequency block. ``mask`` restricts the fit to selected samples;
    samples below ``noise_floor * max|V|`` are always excluded.
    """
    fld = S.field if isinstance(S, Spectrogram) else S
    grid = fld.grid
    d = grid.dim // 2
    if omega.dim != d:
        raise InvalidFieldError("weight must live on the position block")
    mag = np.abs(fld.values)
    peak = float(np.max(mag))
    if peak == 0.0:
        raise UndefinedFitError("spectrogram vanishes identically")
    pts = grid.points()
    x, xi = pts[..., :d], pts[..., d:]
    rho = np.sqrt(np.sum(xi * xi, axis=-1)) ** (1.0 / s)
    with np.errstate(divide="ignore"):
        g = np.log(mag) - omega.log_evaluate(x)
    use = np.ones(mag.shape, bool) if mask is None else np.asarray(mask, bool)
    use = use & (mag >= noise_floor * peak)
    if not np.any(use & np.isfinite(g)):
        raise UndefinedFitError("no nonzero samples in the fit region")
    gu = np.where(use, g, -np.inf)
    log_c_min = float(np.max(gu))
    log_c = log_c_min if C is None else math.log(C)
    pos = use & (rho > 0) & np.isfinite(g)
    r = float(np.min((log_c - g[pos]) / rho[pos])) if np.any(pos) else math.inf

    # decay at the outer frequency layer
    edge = np.zeros(mag.shape, bool)
    for k in range(d, 2 * d):
        sl = [slice(None)] * (2 * d)
        sl[k] = 0
        edge[tuple(sl)] = True
        sl[k] = -1
        edge[tuple(sl)] = True
    lower = bool(np.max(np.where(edge, mag, 0.0)) > boundary_tol * peak)

    residual = np.where(use, g - (log_c - r * rho), -np.inf) if math.isfinite(r) else np.full(g.shape, -np.inf)
    if r_sweep is None:
        top = r if math.isfinite(r) and r > 0 else 1.0
        r_sweep = np.linspace(0.0, 2.0 * top, 9)
    sweep = tuple((float(rr), float(math.exp(min(np.max(np.where(use, g + rr * rho, -np.inf)), 709.0)))) for rr in r_sweep)

    # shell envelope above the noise floor
    noise = math.log(peak) + math.log(10 * noise_floor)
    rmax = float(np.max(rho[use]))
    edges = np.linspace(0.0, rmax, shells + 1)
    centers, envs = [], []
    with np.errstate(divide="ignore"):
        lm = np.log(mag)
    for a, b in zip(edges[:-1], edges[1:]):
        sel = use & (rho >= a) & (rho <= b)
        if not np.any(sel):
            continue
        top = float(np.max(np.where(sel, gu, -np.inf)))
        if float(np.max(np.where(sel, lm, -np.inf))) < noise:
            break
        centers.append(0.5 * (a + b))
        envs.append(top)
    rates = tuple(float(-(e2 - e1) / (c2 - c1)) for c1, c2, e1, e2 in zip(centers, centers[1:], envs, envs[1:]))
    return DecayFit(math.exp(log_c), r, float(s), lower, residual, sweep, rates)
