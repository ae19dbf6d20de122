"""Empirical operator-norm estimation and the continuity scenarios.

An operator ``T`` is judged bounded from a source modulation space to a
target one when the ratios ``||T f||_target / ||f||_source`` stay finite over
a seeded ensemble and their maximum drifts by less than a tolerance along a
ladder of grid refinements. This is evidence of boundedness, never a proof.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from .errors import ConfigurationError, InvalidProbeError, RefusedConversionError, UnsupportedMethodError
from .lattice import OrderedBasis, QuantizationSpec, SampledField, UniformGrid, is_phase_split
from .norms import MixedNormSpec, ModSpaceSpec, log_mixed_norm, modulation_norm
from .pdo import ClosedFormSymbol, Symbol, adjoint_symbol, apply_op, gamma_membership, symbol_from_json
from .stft import Window, hermite_function, stft
from .weights import ExpPower, TensorSplit, Weight, classify_PEs, one, weight_compatibility, weight_from_json

__all__ = [
    "Ensemble",
    "RatioReport",
    "ScenarioResult",
    "op_norm_ratio",
    "stft_kernel_crosscheck",
    "run_scenario",
    "SCENARIOS",
    "default_config",
    "config_hash",
    "fixture_dir",
    "check_fixture",
    "freeze_fixture",
]

PASS, FAIL, INAPPLICABLE = "PASS", "FAIL", "INAPPLICABLE"


# -- ensembles ------------------------------------------------------------------


@dataclass(frozen=True)
class Ensemble:
    """Seeded family of test signals on R (members are closed-form functions).

    ``kind`` is ``"gaussian_chirps"``, ``"hermite_mix"`` or ``"gabor_cloud"``.
    Member ``k`` depends only on ``(kind, seed, k)``, so a larger ``count``
    extends a smaller one.
    """

    kind: str = "gaussian_chirps"
    count: int = 8
    seed: int = 0
    max_order: int = 6
    atoms: int = 4

    def __post_init__(self):
        if self.kind not in ("gaussian_chirps", "hermite_mix", "gabor_cloud"):
            raise ConfigurationError(f"unknown ensemble kind {self.kind!r}")
        if self.count < 1:
            raise ConfigurationError("ensemble needs at least one member")

    def _params(self, k: int) -> dict:
        rng = np.random.default_rng([self.seed, k])
        if self.kind == "gaussian_chirps":
            return {
                "center": float(rng.uniform(-3, 3)),
                "modulation": float(rng.uniform(-3, 3)),
                "chirp": float(rng.uniform(-0.5, 0.5)),
                "width": float(rng.uniform(0.7, 1.5)),
            }
        if self.kind == "hermite_mix":
            c = rng.standard_normal(self.max_order + 1) + 1j * rng.standard_normal(self.max_order + 1)
            return {"coeffs": [[float(v.real), float(v.imag)] for v in c]}
        return {
            "atoms": [
                [float(rng.uniform(-4, 4)), float(rng.uniform(-4, 4)), float(rng.uniform(0.6, 1.4)),
                 float(rng.standard_normal()), float(rng.standard_normal())]
                for _ in range(self.atoms)
            ]
        }

    def member(self, k: int, grid: UniformGrid) -> SampledField:
        p = self._params(k)
        x = grid.axes()[0]
        if self.kind == "gaussian_chirps":
            u = x - p["center"]
            vals = np.exp(-(u**2) / (2 * p["width"] ** 2) + 1j * p["modulation"] * x + 0.5j * p["chirp"] * u**2)
        elif self.kind == "hermite_mix":
            vals = sum(complex(*c) * hermite_function(n, x) for n, c in enumerate(p["coeffs"]))
        else:
            vals = sum(
                complex(re, im) * np.exp(-((x - c) ** 2) / (2 * w**2) + 1j * m * x) for c, m, w, re, im in p["atoms"]
            )
        return SampledField(grid, vals)

    def members(self, grid: UniformGrid) -> list[SampledField]:
        return [self.member(k, grid) for k in range(self.count)]

    def describe(self, k: int) -> dict:
        return {"kind": self.kind, "seed": self.seed, "index": k, **self._params(k)}

    def to_json(self) -> dict:
        return {"kind": self.kind, "count": self.count, "seed": self.seed, "max_order": self.max_order,
                "atoms": self.atoms}


# -- ratio reports ----------------------------------------------------------------


@dataclass(frozen=True)
class RatioReport:
    """Ratios on the finest grid plus the refinement trend of their maximum."""

    max_ratio: float
    ratios: tuple
    source_norms: tuple
    target_norms: tuple
    argmax: dict
    grid: dict
    trend: tuple
    skipped: int = 0
    drift_tol: float = 0.1

    @property
    def drift(self) -> float:
        vals = [r for _, r in self.trend]
        if not all(math.isfinite(v) for v in vals) or vals[-1] == 0:
            return math.inf
        return max(abs(v - vals[-1]) for v in vals) / vals[-1]

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_ratio) and self.drift < self.drift_tol

    def to_json(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "drift": self.drift,
            "passed": self.passed,
            "trend": [[n, r] for n, r in self.trend],
            "ratios": list(self.ratios),
            "argmax": self.argmax,
            "grid": self.grid,
            "skipped": self.skipped,
            "drift_tol": self.drift_tol,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "ratio", "source_norm", "target_norm"])
        for k, (r, s, t) in enumerate(zip(self.ratios, self.source_norms, self.target_norms)):
            w.writerow([k, repr(r), repr(s), repr(t)])
        return buf.getvalue()


def _apply(a: Symbol, A: QuantizationSpec, f: SampledField) -> SampledField:
    """Fast path, falling back to quadrature when a growing symbol cannot be converted."""
    try:
        return apply_op(a, A, f, "fast")
    except RefusedConversionError:
        if f.grid.dim != 1:
            raise
        return apply_op(a, A, f, "quadrature")
    except ConfigurationError as exc:
        if f.grid.dim != 1 or "needs a phase-space grid" not in str(exc):
            raise
        return apply_op(a, A, f, "quadrature")


def op_norm_ratio(
    a: Symbol,
    A: QuantizationSpec,
    source: ModSpaceSpec,
    target: ModSpaceSpec,
    ens: Ensemble,
    ladder=(128, 192, 256),
    L: float = 12.0,
    drift_tol: float = 0.1,
    operator=None,
) -> RatioReport:
    """Empirical norm of ``Op_A(a)`` from ``source`` to ``target``.

    Each ratio is that of the member scaled to unit source norm; zero members are skipped
    with a warning. ``operator`` (a callable on fields) replaces ``Op_A(a)``
    when given.
    """
    ladder = tuple(int(n) for n in ladder)
    if any(b <= a_ for a_, b in zip(ladder, ladder[1:])):
        raise ConfigurationError("grid ladder must be strictly increasing")
    op = operator or (lambda f: _apply(a, A, f))
    trend = []
    for N in ladder:
        grid = UniformGrid.box(L, N)
        ratios, src, tgt, skipped = [], [], [], 0
        for f in ens.members(grid):
            ns = modulation_norm(f, source)
            if ns == 0.0:
                skipped += 1
                continue
            # linearity: the ratio for f / ns equals this one without rescaling roundoff
            nt = modulation_norm(op(f), target)
            ratios.append(nt / ns)
            src.append(ns)
            tgt.append(nt)
        if skipped:
            warnings.warn(f"{skipped} ensemble members with zero source norm skipped", RuntimeWarning)
        if not ratios:
            raise ConfigurationError("no ensemble member has a nonzero source norm")
        trend.append((N, max(ratios)))
    k = int(np.argmax(ratios))
    return RatioReport(
        float(max(ratios)),
        tuple(ratios),
        tuple(src),
        tuple(tgt),
        ens.describe(k),
        {"L": L, "N": ladder[-1], "ladder": list(ladder)},
        tuple(trend),
        skipped,
        drift_tol,
    )


# -- kernel identity ----------------------------------------------------------------


def _default_probes(grid: UniformGrid, count: int = 64, extent: float = 3.0) -> list[tuple[float, float]]:
    ps = grid.phase_space()
    xs, xis = ps.axes()
    side = int(round(math.sqrt(count)))
    px = [xs[int(np.argmin(np.abs(xs - t)))] for t in np.linspace(-extent, extent, side)]
    pxi = [xis[int(np.argmin(np.abs(xis - t)))] for t in np.linspace(-extent, extent, side)]
    return [(float(x), float(xi)) for x in px for xi in pxi][:count]


def stft_kernel_crosscheck(
    a: Symbol,
    f: SampledField,
    omega: Weight | None = None,
    v: Weight | None = None,
    probes=None,
    window: Window | None = None,
    eta_step: float = 0.05,
    eta_extent: float = 12.0,
) -> dict:
    """Compare ``V(Op_0(a) f)`` with its kernel representation at probe points.

    The right side is ``(2 pi)^{-1} (f, e^{i . xi} H(x, xi, .)) omega(x, xi)``
    with ``H(x, xi, y) = v(x - y) \\int Phi(x, xi, y, eta) phi_v(eta) e^{i(y - x) eta} d eta``,
    ``Phi = b(y, xi + eta) / (omega(x, xi) v(x - y) v(eta))``, ``phi_v = hat(phi) v``
    and ``b`` the adjoint symbol. Returns the max deviation relative to the
    largest left-side magnitude.
    """
    g = f.grid
    if g.dim != 1:
        raise UnsupportedMethodError("kernel crosscheck is one-dimensional")
    window = window or Window.gaussian(1.0)
    omega = omega or one(2)
    v = v or one(1)
    probes = _default_probes(g) if probes is None else [tuple(map(float, p)) for p in probes]
    if len(probes) > 64:
        raise InvalidProbeError("at most 64 probes")
    ps = g.phase_space()
    try:
        idx = ps.index_of(np.array(probes))
    except Exception as exc:
        raise InvalidProbeError("probe points must be phase-space grid samples") from exc

    S = stft(apply_op(a, QuantizationSpec.kohn_nirenberg(1), f), window)
    lhs = S.values[idx[:, 0], idx[:, 1]]

    b = adjoint_symbol(a, grid=ps)
    y = g.axes()[0]
    h = g.steps[0]
    eta = np.arange(-eta_extent, eta_extent + 0.5 * eta_step, eta_step)
    phi_v = window.fourier(eta) * v.evaluate(eta)
    rhs = np.empty(len(probes), dtype=complex)
    for k, (x0, xi0) in enumerate(probes):
        w = float(omega.evaluate(np.array([[x0, xi0]]))[0])
        vxy = v.evaluate(x0 - y)
        bvals = _eval_symbol(b, y[:, None], xi0 + eta[None, :], ps)
        Phi = bvals / (w * vxy[:, None] * v.evaluate(eta)[None, :])
        H = vxy * np.sum(Phi * phi_v[None, :] * np.exp(1j * np.outer(y - x0, eta)), axis=1) * eta_step
        pairing = np.sum(f.values * np.conj(np.exp(1j * y * xi0) * H)) * h
        rhs[k] = pairing * w / (2 * math.pi)
    scale = float(np.max(np.abs(lhs)))
    dev = float(np.max(np.abs(lhs - rhs))) / scale if scale > 0 else float(np.max(np.abs(rhs)))
    return {"deviation": dev, "probes": len(probes), "max_lhs": scale}


def _eval_symbol(b: Symbol, x, xi, ps: UniformGrid) -> np.ndarray:
    if isinstance(b, ClosedFormSymbol):
        return b.evaluate(x, xi)
    # sampled adjoint: interpolate along xi on each y row of the grid
    vals = b.field.values
    xis = ps.axes()[1]
    out = np.empty(np.broadcast_shapes(np.shape(x), np.shape(xi)), dtype=complex)
    xi_row = np.broadcast_to(xi, out.shape)[0]
    for j in range(out.shape[0]):
        out[j] = np.interp(xi_row, xis, vals[j].real, 0, 0) + 1j * np.interp(xi_row, xis, vals[j].imag, 0, 0)
    return out


# -- scenario configuration -------------------------------------------------------

_COMMON = {
    "quantization": "kn",
    "s": 1.0,
    "exponents": [2, 2],
    "basis": "identity",
    "ensemble": {"kind": "gaussian_chirps", "count": 8, "seed": 0},
    "ladder": [128, 192, 256],
    "L": 12.0,
    "drift_tol": 0.1,
    "window_sigma": 1.0,
    "r_grid": [0.1, 0.25, 0.5, 1.0, 2.0],
    "membership_mode": "derivative",
}

_DEFAULTS = {
    "p32": {
        **_COMMON,
        "symbol": {"kind": "expression", "expr": "sqrt(1 + x**2 + xi**2)"},
        "omega": {"form": "polynomial", "t": 2.0, "dim": 2},
        "omega0": {"form": "polynomial", "t": 1.0, "dim": 2},
    },
    "p32b": {
        **_COMMON,
        "s": 2.0,
        "symbol": {"kind": "expression", "expr": "sqrt(1 + x**2 + xi**2)"},
        "omega": {"form": "polynomial", "t": 2.0, "dim": 2},
        "omega0": {"form": "polynomial", "t": 1.0, "dim": 2},
    },
    "opcont3": {
        **_COMMON,
        "symbol": {"kind": "expression", "expr": "sqrt(1 + x**2 + xi**2)"},
        "omega": {"form": "polynomial", "t": 1.0, "dim": 2},
        "omega0": {"form": "polynomial", "t": 1.0, "dim": 2},
        "basis": {"permutation": [1, 0]},
        "exponents": ["inf", 1],
        "weight_class": "P0",
    },
    "propopcont": {
        **_COMMON,
        "symbol": {"kind": "gaussian_envelope", "center": [0, 0], "widths": [2, 2]},
        "omega1": {"form": "tensor", "x": {"form": "polynomial", "t": 1.0}, "xi": {"form": "polynomial", "t": 1.0}},
        "omega2": {"form": "tensor", "x": {"form": "polynomial", "t": 1.0}, "xi": {"form": "polynomial", "t": 1.0}},
        "omega0": {
            "form": "tensor",
            "x": {"form": "one", "dim": 2},
            "xi": {"form": "tensor", "x": {"form": "polynomial", "t": 1.0}, "xi": {"form": "polynomial", "t": 1.0}},
        },
        "symbol_grid": {"L": 8.0, "N": 32},
    },
    "sobolev": {
        **_COMMON,
        "r": 0.3,
        "r0": 0.2,
        "symbol": {"kind": "expression", "expr": "exp(0.2*xi**2/sqrt(1 + xi**2))"},
        "bracket_width": 3.0,
    },
    "weightedl2": {
        **_COMMON,
        "r": 0.3,
        "r0": 0.2,
        "symbol": {"kind": "expression", "expr": "exp(0.2*x**2/sqrt(1 + x**2))"},
        "bracket_width": 3.0,
    },
    "kernel": {
        "symbol": {"kind": "expression", "expr": "xi"},
        "signal": {"expr": "exp(-x**2/2)"},
        "N": 256,
        "L": 12.0,
        "probes": 64,
        "omega": {"form": "one", "dim": 2},
        "v": {"form": "one", "dim": 1},
        "window_sigma": 1.0,
        "tol": 1e-4,
    },
}

SCENARIOS = tuple(_DEFAULTS)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigurationError(f"unknown configuration key {k!r}")
        out[k] = v
    return out


def default_config(name: str, overrides: dict | None = None) -> dict:
    """Fully defaulted configuration for a scenario (unknown keys are rejected)."""
    if name not in _DEFAULTS:
        raise ConfigurationError(f"unknown scenario {name!r}")
    return _merge(_DEFAULTS[name], overrides or {})


def config_hash(name: str, config: dict) -> str:
    blob = json.dumps({"scenario": name, "config": config}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _quantization(q, d: int = 1) -> QuantizationSpec:
    if q in ("kn", "kohn_nirenberg"):
        return QuantizationSpec.kohn_nirenberg(d)
    if q == "weyl":
        return QuantizationSpec.weyl(d)
    if isinstance(q, (int, float)):
        return QuantizationSpec(np.eye(d) * float(q))
    return QuantizationSpec(q)


def _basis(obj, dim: int) -> OrderedBasis:
    if obj in (None, "identity"):
        return OrderedBasis.identity(dim)
    if isinstance(obj, dict) and "permutation" in obj:
        return OrderedBasis.permuted(obj["permutation"])
    return OrderedBasis(tuple(tuple(v) for v in obj))


def _space(weight: Weight, cfg: dict) -> ModSpaceSpec:
    basis = _basis(cfg.get("basis"), 2)
    return ModSpaceSpec(weight, MixedNormSpec(basis, tuple(cfg["exponents"])), Window.gaussian(cfg["window_sigma"]))


def _ensemble(cfg: dict) -> Ensemble:
    return Ensemble(**cfg["ensemble"])


# -- scenario results ---------------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    status: str
    config: dict
    config_hash: str
    report: RatioReport | None = None
    diagnostics: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 1, INAPPLICABLE: 4}[self.status]

    def to_json(self) -> dict:
        return {
            "scenario": self.name,
            "status": self.status,
            "config_hash": self.config_hash,
            "config": self.config,
            "report": None if self.report is None else self.report.to_json(),
            "diagnostics": self.diagnostics,
            "extra": self.extra,
        }

    def frozen_values(self) -> dict:
        """Numbers compared bit-for-bit against fixtures."""
        out = {}
        if self.report is not None:
            out["max_ratio"] = repr(self.report.max_ratio)
            out["trend"] = [[n, repr(r)] for n, r in self.report.trend]
        for k, v in sorted(self.extra.items()):
            if isinstance(v, float):
                out[k] = repr(v)
        out["status"] = self.status
        return out


def _membership(a: Symbol, omega0: Weight, cfg: dict, beurling: bool) -> tuple[bool, dict]:
    rep = gamma_membership(a, omega0, cfg["s"], mode=cfg["membership_mode"])
    ok = rep.beurling_trend if beurling else rep.consistent
    return ok, rep.to_json()


def _classes(weights: dict, cfg: dict, need_all: bool) -> tuple[bool, dict]:
    out, ok = {}, True
    for name, w in weights.items():
        c = classify_PEs(w, cfg["s"], cfg["r_grid"])
        out[name] = c.to_json()
        ok = ok and (c.verdict == "all" if need_all else c.verdict in ("all", "some"))
    return ok, out


def _continuity_scenario(name: str, cfg: dict, beurling: bool, weight_class_all: bool) -> ScenarioResult:
    h = config_hash(name, cfg)
    a = symbol_from_json(cfg["symbol"])
    omega = weight_from_json(cfg["omega"])
    omega0 = weight_from_json(cfg["omega0"])
    diag = {}
    if cfg["s"] < 1:
        raise ConfigurationError("continuity scenarios need s >= 1")
    if name == "opcont3":
        split = is_phase_split(_basis(cfg["basis"], 2))
        diag["phase_split"] = bool(split)
        if not split:
            return ScenarioResult(name, INAPPLICABLE, cfg, h, None, diag)
    ok_w, diag["weights"] = _classes({"omega": omega, "omega0": omega0}, cfg, weight_class_all)
    ok_a, diag["membership"] = _membership(a, omega0, cfg, beurling)
    if not (ok_w and ok_a):
        return ScenarioResult(name, INAPPLICABLE, cfg, h, None, diag)
    rep = op_norm_ratio(
        a,
        _quantization(cfg["quantization"]),
        _space(omega0 * omega, cfg),
        _space(omega, cfg),
        _ensemble(cfg),
        cfg["ladder"],
        cfg["L"],
        cfg["drift_tol"],
    )
    return ScenarioResult(name, PASS if rep.passed else FAIL, cfg, h, rep, diag)


def scenario_thm_p32(config: dict | None = None) -> ScenarioResult:
    """Roumieu-type continuity: weights in the every-r class, symbol with some Gevrey rate."""
    return _continuity_scenario("p32", default_config("p32", config), beurling=False, weight_class_all=True)


def scenario_thm_p32b(config: dict | None = None) -> ScenarioResult:
    """Beurling-type continuity: weights in the some-r class, symbol with a Beurling trend."""
    return _continuity_scenario("p32b", default_config("p32b", config), beurling=True, weight_class_all=False)


def scenario_opcont3(config: dict | None = None) -> ScenarioResult:
    """Continuity on mixed quasi-norm modulation spaces over a phase-split basis."""
    cfg = default_config("opcont3", config)
    need_all = cfg.get("weight_class", "P0") == "P0"
    return _continuity_scenario("opcont3", cfg, beurling=not need_all, weight_class_all=need_all)


def _symbol_mixed_norm(a: Symbol, omega0: Weight, L: float, N: int) -> float:
    """``(inf, 1)`` mixed norm of the weighted phase-space STFT of the symbol."""
    grid = UniformGrid.box(L, N, 2)
    fld = SampledField(grid, a.sample(grid))
    S = stft(fld, Window.gaussian(1.0, 2))
    spec = MixedNormSpec(OrderedBasis.identity(4), ("inf", "inf", 1, 1))
    lg = log_mixed_norm(S.field, spec, extra_weight=omega0)
    return math.exp(lg) if lg < 709 else math.inf


def scenario_prop_opcont(config: dict | None = None) -> ScenarioResult:
    """Kohn-Nirenberg continuity under the three-weight compatibility hypothesis."""
    name = "propopcont"
    cfg = default_config(name, config)
    h = config_hash(name, cfg)
    a = symbol_from_json(cfg["symbol"])
    w1, w2, w0 = (weight_from_json(cfg[k]) for k in ("omega1", "omega2", "omega0"))
    diag = {}
    split = is_phase_split(_basis(cfg["basis"], 2))
    diag["phase_split"] = bool(split)
    comp = weight_compatibility(w1, w2, w0)
    diag["compatibility"] = comp.to_json()
    if not split or not comp.finite:
        return ScenarioResult(name, INAPPLICABLE, cfg, h, None, diag)
    sg = cfg["symbol_grid"]
    sym_norm = _symbol_mixed_norm(a, w0, sg["L"], sg["N"])
    diag["symbol_norm"] = sym_norm if math.isfinite(sym_norm) else "inf"
    if not math.isfinite(sym_norm):
        return ScenarioResult(name, INAPPLICABLE, cfg, h, None, diag)
    rep = op_norm_ratio(
        a,
        QuantizationSpec.kohn_nirenberg(1),
        _space(w1, cfg),
        _space(w2, cfg),
        _ensemble(cfg),
        cfg["ladder"],
        cfg["L"],
        cfg["drift_tol"],
    )
    return ScenarioResult(name, PASS if rep.passed else FAIL, cfg, h, rep, diag, {"symbol_norm": sym_norm})


def _identity_bracket(ens: Ensemble, ladder, L: float, direct, spec: ModSpaceSpec) -> list:
    out = []
    for N in ladder:
        grid = UniformGrid.box(L, N)
        ratios = [modulation_norm(f, spec) / direct(f) for f in ens.members(grid)]
        out.append((N, min(ratios), max(ratios)))
    return out


def _growth_scenario(name: str, side: str, config: dict | None) -> ScenarioResult:
    cfg = default_config(name, config)
    h = config_hash(name, cfg)
    r, r0, s, L = cfg["r"], cfg["r0"], cfg["s"], cfg["L"]

    def weight(rr):
        e = ExpPower(rr, s, 1)
        return TensorSplit(one(1), e) if side == "xi" else TensorSplit(e, one(1))

    edge = max(math.pi * max(cfg["ladder"]) / (2 * L), L) if side == "xi" else L
    if abs(r) * edge ** (1 / s) > math.log(1e12) or abs(r - r0) * edge ** (1 / s) > math.log(1e12):
        raise ConfigurationError("weight exceeds 1e12 at the box boundary; reduce r")

    def direct(f: SampledField) -> float:
        if side == "xi":
            from .lattice import fourier_transform

            F = fourier_transform(f)
            return F.with_values(F.values * np.exp(r * np.abs(F.grid.axes()[0]) ** (1 / s))).l2_norm()
        return f.with_values(f.values * np.exp(r * np.abs(f.grid.axes()[0]) ** (1 / s))).l2_norm()

    win = Window.gaussian(cfg["window_sigma"])
    src = ModSpaceSpec(weight(r), MixedNormSpec(OrderedBasis.identity(2), (2, 2)), win)
    tgt = ModSpaceSpec(weight(r - r0), MixedNormSpec(OrderedBasis.identity(2), (2, 2)), win)
    ens = _ensemble(cfg)
    bracket = _identity_bracket(ens, cfg["ladder"], L, direct, src)
    lo = [b[1] for b in bracket]
    hi = [b[2] for b in bracket]
    width = hi[-1] / lo[-1]
    stable = max(max(abs(v - lo[-1]) / lo[-1] for v in lo), max(abs(v - hi[-1]) / hi[-1] for v in hi))
    extra = {"bracket_low": lo[-1], "bracket_high": hi[-1], "bracket_width": width, "bracket_drift": stable}
    diag = {"bracket": [[n, a_, b_] for n, a_, b_ in bracket]}

    a = symbol_from_json(cfg["symbol"])
    omega0 = weight(r0)
    ok_a, diag["membership"] = _membership(a, omega0, cfg, beurling=False)
    if not ok_a:
        return ScenarioResult(name, INAPPLICABLE, cfg, h, None, diag, extra)
    rep = op_norm_ratio(a, _quantization(cfg["quantization"]), src, tgt, ens, cfg["ladder"], L, cfg["drift_tol"])
    ok = rep.passed and width < cfg["bracket_width"] and stable < cfg["drift_tol"]
    return ScenarioResult(name, PASS if ok else FAIL, cfg, h, rep, diag, extra)


def scenario_sobolev(config: dict | None = None) -> ScenarioResult:
    """Sobolev-type spaces with frequency weight ``exp(r |xi|^(1/s))``."""
    return _growth_scenario("sobolev", "xi", config)


def scenario_weighted_l2(config: dict | None = None) -> ScenarioResult:
    """Weighted L^2 with position weight ``exp(r |x|^(1/s))``."""
    return _growth_scenario("weightedl2", "x", config)


def scenario_kernel(config: dict | None = None) -> ScenarioResult:
    name = "kernel"
    cfg = default_config(name, config)
    h = config_hash(name, cfg)
    grid = UniformGrid.box(cfg["L"], cfg["N"])
    x = sp.Symbol("x", real=True)
    fn = sp.lambdify(x, sp.sympify(cfg["signal"]["expr"], locals={"x": x}), "numpy")
    f = SampledField(grid, np.broadcast_to(np.asarray(fn(grid.axes()[0]), dtype=complex), grid.shape))
    probes = cfg["probes"]
    probes = _default_probes(grid, probes) if isinstance(probes, int) else probes
    res = stft_kernel_crosscheck(
        symbol_from_json(cfg["symbol"]),
        f,
        weight_from_json(cfg["omega"]),
        weight_from_json(cfg["v"]),
        probes,
        Window.gaussian(cfg["window_sigma"]),
    )
    status = PASS if res["deviation"] < cfg["tol"] else FAIL
    return ScenarioResult(name, status, cfg, h, None, {}, {"deviation": res["deviation"], "probes": res["probes"]})


_RUNNERS = {
    "p32": scenario_thm_p32,
    "p32b": scenario_thm_p32b,
    "opcont3": scenario_opcont3,
    "propopcont": scenario_prop_opcont,
    "sobolev": scenario_sobolev,
    "weightedl2": scenario_weighted_l2,
    "kernel": scenario_kernel,
}


def run_scenario(name: str, config: dict | None = None) -> ScenarioResult:
    if name not in _RUNNERS:
        raise ConfigurationError(f"unknown scenario {name!r}")
    return _RUNNERS[name](config)


# -- frozen fixtures ----------------------------------------------------------------


def fixture_dir() -> Path:
    env = os.environ.get("MODCALC_FIXTURES")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def _fixture_path(result: ScenarioResult, directory: Path | None) -> Path:
    directory = fixture_dir() if directory is None else Path(directory)
    return directory / f"{result.name}-{result.config_hash[:16]}.json"


def freeze_fixture(result: ScenarioResult, directory: Path | None = None) -> Path:
    path = _fixture_path(result, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"scenario": result.name, "config_hash": result.config_hash, "values": result.frozen_values()}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def check_fixture(result: ScenarioResult, directory: Path | None = None) -> str:
    """``"match"``, ``"mismatch"`` or ``"missing"`` against the frozen values."""
    path = _fixture_path(result, directory)
    if not path.exists():
        return "missing"
    stored = json.loads(path.read_text())
    if stored.get("config_hash") != result.config_hash:
        return "mismatch"
    return "match" if stored["values"] == json.loads(json.dumps(result.frozen_values())) else "mismatch"
