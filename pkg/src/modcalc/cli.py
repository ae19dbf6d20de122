"""Command-line front end: ``modcalc {stft,norm,apply,verify}``.

Exit codes: 0 pass, 1 fail, 2 configuration error, 3 numeric error,
4 scenario inapplicable. Every command validates a JSON run configuration
before computing; ``--dry-run`` prints that configuration and stops.
"""

from __future__ import annotations

import argparse
import contextlib
import datetime as _dt
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigurationError, NumericError
from .fieldio import read_field, write_field
from .harness import SCENARIOS, check_fixture, default_config, freeze_fixture, run_scenario
from .lattice import QuantizationSpec
from .norms import MixedNormSpec, ModSpaceSpec, basis_from_json, mixed_norm, modulation_norm, parse_exponent
from .pdo import apply_op, symbol_from_field, symbol_from_json
from .stft import Window, stft, stft_decay_fit
from .weights import SHIPPED_WEIGHTS, one, weight_from_json

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INAPPLICABLE = 0, 1, 2, 3, 4

_WINDOW = {"type": "object", "properties": {"kind": {"enum": ["gaussian", "hermite"]},
           "sigma": {"type": "number", "exclusiveMinimum": 0}, "order": {"type": "integer", "minimum": 0}},
           "required": ["kind", "sigma"], "additionalProperties": False}

_EXPONENT = {"anyOf": [{"type": "number"}, {"enum": ["inf", "infinity", "∞"]}]}

COMMAND_SCHEMAS = {
    "stft": {
        "type": "object",
        "properties": {
            "input": {"type": "string"},
            "out": {"type": "string"},
            "summary": {"type": "string"},
            "window": _WINDOW,
            "stride": {"type": "integer", "minimum": 1},
            "fit_decay": {"type": ["object", "null"], "properties": {
                "s": {"type": "number", "exclusiveMinimum": 0},
                "weight": {"type": ["string", "object"]}}, "required": ["s", "weight"], "additionalProperties": False},
        },
        "required": ["input", "out", "window"],
        "additionalProperties": False,
    },
    "norm": {
        "type": "object",
        "properties": {
            "input": {"type": "string"},
            "exponents": {"type": "array", "items": _EXPONENT, "minItems": 1},
            "basis": {"type": ["string", "array", "object"]},
            "weight": {"type": ["string", "object", "null"]},
            "modulation": {"type": "boolean"},
            "window": _WINDOW,
        },
        "required": ["input", "exponents"],
        "additionalProperties": False,
    },
    "apply": {
        "type": "object",
        "properties": {
            "input": {"type": "string"},
            "out": {"type": "string"},
            "symbol": {"type": ["object", "null"]},
            "symbol_field": {"type": ["string", "null"]},
            "quantization": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            "method": {"enum": ["fast", "quadrature"]},
        },
        "required": ["input", "out", "quantization", "method"],
        "additionalProperties": False,
    },
}


def _scenario_schemas() -> dict:
    text = resources.files("modcalc").joinpath("schemas/scenarios.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(command: str, config: dict, scenario: str | None = None) -> dict:
    """Validate ``config`` against the command (or scenario) schema; returns it unchanged."""
    schema = _scenario_schemas()[scenario] if scenario else COMMAND_SCHEMAS[command]
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid configuration at {path}: {exc.message}") from None
    return config


# -- flag parsing ----------------------------------------------------------------


def parse_window(text: str) -> dict:
    """``gaussian:<sigma>`` or ``hermite:<order>:<sigma>``."""
    parts = text.split(":")
    spec = None
    try:
        if parts[0] == "gaussian" and len(parts) <= 2:
            spec = {"kind": "gaussian", "sigma": float(parts[1]) if len(parts) == 2 else 1.0}
        elif parts[0] == "hermite" and len(parts) == 3:
            spec = {"kind": "hermite", "order": int(parts[1]), "sigma": float(parts[2])}
    except ValueError:
        pass
    else:
        if spec is not None and spec["sigma"] > 0 and spec.get("order", 0) >= 0:
            return spec
    raise ConfigurationError(f"cannot parse window {text!r}")


def build_window(spec: dict, d: int) -> Window:
    if spec["kind"] == "hermite":
        return Window.hermite(spec["order"], spec["sigma"], d)
    return Window.gaussian(spec["sigma"], d)


def parse_keyvals(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        out[key] = val
    return out


def parse_quantization(text: str, d: int = 1) -> list:
    """``weyl``, ``kn`` or ``matrix:<csv>`` (row-major, d*d entries)."""
    if text == "weyl":
        return QuantizationSpec.weyl(d).matrix.tolist()
    if text in ("kn", "kohn-nirenberg"):
        return QuantizationSpec.kohn_nirenberg(d).matrix.tolist()
    if text.startswith("matrix:"):
        try:
            vals = [float(v) for v in text[7:].split(",")]
        except ValueError:
            raise ConfigurationError(f"bad matrix entries in {text!r}") from None
        n = int(round(len(vals) ** 0.5))
        if n * n != len(vals):
            raise ConfigurationError("quantization matrix must have a square number of entries")
        return np.reshape(vals, (n, n)).tolist()
    raise ConfigurationError(f"unknown quantization {text!r}")


def resolve_weight(obj, dim: int):
    """Shipped weight name (``one`` adapts to any dimension) or a JSON descriptor."""
    if obj is None:
        return None
    if isinstance(obj, dict):
        w = weight_from_json(obj)
    elif obj == "one":
        return one(dim)
    elif obj in SHIPPED_WEIGHTS:
        w = SHIPPED_WEIGHTS[obj]
    else:
        try:
            w = weight_from_json(json.loads(obj))
        except json.JSONDecodeError:
            raise ConfigurationError(f"unknown weight {obj!r}") from None
    if w.dim != dim:
        raise ConfigurationError(f"weight lives on R^{w.dim}, expected R^{dim}")
    return w


def _load_field(path: str):
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"input file not found: {path}")
    return read_field(p)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _sidecar(path: Path) -> None:
    stamp = {"written_at": _dt.datetime.now(_dt.timezone.utc).isoformat(), "report": path.name}
    _write_json(path.with_name(path.stem + ".timestamp.json"), stamp)


# -- commands ------------------------------------------------------------------------


def config_stft(args) -> dict:
    fit = None
    if args.fit_decay:
        kv = parse_keyvals(args.fit_decay)
        unknown = set(kv) - {"s", "weight"}
        if unknown:
            raise ConfigurationError(f"unknown --fit-decay keys {sorted(unknown)}")
        try:
            fit = {"s": float(kv.get("s", 1.0)), "weight": kv.get("weight", "one")}
        except ValueError:
            raise ConfigurationError("--fit-decay s must be a number") from None
    return {
        "input": args.input,
        "out": args.out,
        "summary": args.summary or args.out + ".json",
        "window": parse_window(args.window),
        "stride": args.stride,
        "fit_decay": fit,
    }


def run_stft(cfg: dict) -> int:
    f, _ = _load_field(cfg["input"])
    S = stft(f, build_window(cfg["window"], f.grid.dim), cfg["stride"])
    mag = np.abs(S.values)
    peak = np.unravel_index(int(np.argmax(mag)), mag.shape)
    summary = {
        "config": cfg,
        "shape": list(mag.shape),
        "peak": {"index": [int(i) for i in peak],
                 "location": S.field.grid.points()[peak].tolist(), "magnitude": float(mag[peak])},
        "energy": float(np.sum(mag**2) * S.field.grid.cell_volume),
        "meta": S.block(),
    }
    if cfg["fit_decay"]:
        omega = resolve_weight(cfg["fit_decay"]["weight"], f.grid.dim)
        summary["decay_fit"] = stft_decay_fit(S, omega, cfg["fit_decay"]["s"]).to_json()
    write_field(cfg["out"], S.field, {"STFT": S.block()})
    _write_json(Path(cfg["summary"]), summary)
    return EXIT_PASS


def config_norm(args) -> dict:
    exps = [e.strip() for e in args.exponents.split(",")]
    try:
        exps = [e if e.lower() in ("inf", "infinity", "∞") else float(e) for e in exps]
    except ValueError:
        raise ConfigurationError(f"cannot parse exponents {args.exponents!r}") from None
    weight = args.weight
    if weight is not None and weight.lstrip().startswith("{"):
        weight = json.loads(weight)
    return {
        "input": args.input,
        "exponents": exps,
        "basis": args.basis,
        "weight": weight,
        "modulation": args.modulation,
        "window": parse_window(args.window),
    }


def run_norm(cfg: dict) -> int:
    f, _ = _load_field(cfg["input"])
    exps = tuple(parse_exponent(p) for p in cfg["exponents"])
    dim = 2 * f.grid.dim if cfg["modulation"] else f.grid.dim
    if len(exps) != dim:
        raise ConfigurationError(f"{len(exps)} exponents for a {dim}-dimensional norm")
    spec = MixedNormSpec(basis_from_json(cfg["basis"], dim), exps)
    weight = resolve_weight(cfg["weight"], dim)
    if cfg["modulation"]:
        mspec = ModSpaceSpec(weight or one(dim), spec, build_window(cfg["window"], f.grid.dim))
        value = modulation_norm(f, mspec)
        echo = mspec.to_json()
    else:
        spec = MixedNormSpec(spec.basis, exps, weight)
        value = mixed_norm(f, spec)
        echo = spec.to_json()
    print(f"{value:.12f}")
    print(json.dumps(echo, sort_keys=True, ensure_ascii=False))
    return EXIT_PASS


def config_apply(args) -> dict:
    symbol = None
    if args.symbol is not None:
        text = args.symbol.strip()
        symbol = json.loads(text) if text.startswith("{") else {"kind": "expression", "expr": text}
    return {
        "input": args.input,
        "out": args.out,
        "symbol": symbol,
        "symbol_field": args.symbol_field,
        "quantization": parse_quantization(args.quantization, args.dim),
        "method": args.method,
    }


def run_apply(cfg: dict) -> int:
    f, _ = _load_field(cfg["input"])
    if (cfg["symbol"] is None) == (cfg["symbol_field"] is None):
        raise ConfigurationError("give exactly one of --symbol and --symbol-field")
    if cfg["symbol_field"] is not None:
        a = symbol_from_field(*_load_field(cfg["symbol_field"]))
    else:
        sym = dict(cfg["symbol"])
        sym.setdefault("d", f.grid.dim)
        a = symbol_from_json(sym)
    if a.d != f.grid.dim:
        raise ConfigurationError(f"symbol on R^{2 * a.d} for a signal on R^{f.grid.dim}")
    A = QuantizationSpec(cfg["quantization"])
    g = apply_op(a, A, f, cfg["method"])
    write_field(cfg["out"], g)
    return EXIT_PASS


def config_verify(args) -> dict:
    overrides = {}
    if args.config:
        p = Path(args.config)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {args.config}")
        try:
            overrides = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
        if not isinstance(overrides, dict):
            raise ConfigurationError("config must be a JSON object")
    if args.scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
    validate("verify", overrides, args.scenario)
    return default_config(args.scenario, overrides)


def run_verify(cfg: dict, scenario: str, out_dir: str, freeze: bool = False, check: bool = False) -> int:
    result = run_scenario(scenario, cfg)
    out = Path(out_dir)
    report = out / f"{scenario}.json"
    _write_json(report, result.to_json())
    _sidecar(report)
    if result.report is not None:
        (out / f"{scenario}.csv").write_text(result.report.to_csv(), encoding="utf-8")
    else:
        rows = ["key,value"] + [f"{k},{v!r}" for k, v in sorted(result.extra.items()) if isinstance(v, (int, float))]
        (out / f"{scenario}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    line = f"{scenario}: {result.status}"
    if result.report is not None:
        line += f" max_ratio={result.report.max_ratio:.12g}"
    print(line)
    if freeze:
        print(f"fixture written: {freeze_fixture(result)}")
    if check:
        state = check_fixture(result)
        print(f"fixture: {state}")
        if state == "mismatch":
            return EXIT_FAIL
    return result.exit_code


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modcalc", description="Time-frequency numerics and operator-continuity checks.")
    parser.add_argument("--threads", type=int, default=None, help="cap on BLAS/FFT worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dry-run", action="store_true", help="print the validated, defaulted config and exit")

    p = sub.add_parser("stft", help="short-time Fourier transform of a field file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="JSON summary path (default <out>.json)")
    p.add_argument("--window", default="gaussian:1.0")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--fit-decay", nargs="+", metavar="KEY=VALUE", help="e.g. s=1 weight=one")
    common(p)

    p = sub.add_parser("norm", help="weighted mixed or modulation norm of a field file")
    p.add_argument("--input", required=True)
    p.add_argument("--exponents", required=True, help="comma separated, innermost first; 'inf' allowed")
    p.add_argument("--basis", default="identity", help="identity or permuted:i,j,...")
    p.add_argument("--weight", default=None, help="shipped name or JSON descriptor")
    p.add_argument("--modulation", action="store_true", help="norm of the STFT on phase space")
    p.add_argument("--window", default="gaussian:1.0")
    common(p)

    p = sub.add_parser("apply", help="apply a pseudo-differential operator")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--symbol", default=None, help="sympy expression in x, xi or a JSON descriptor")
    p.add_argument("--symbol-field", default=None, help="sampled symbol field file")
    p.add_argument("--quantization", default="kn", help="weyl, kn or matrix:<csv>")
    p.add_argument("--method", choices=["fast", "quadrature"], default="fast")
    p.add_argument("--dim", type=int, default=1, help="signal dimension for weyl/kn")
    common(p)

    p = sub.add_parser("verify", help="run a continuity scenario")
    p.add_argument("scenario")
    p.add_argument("--config", default=None, help="JSON overrides of the scenario defaults")
    p.add_argument("--out-dir", default="reports")
    p.add_argument("--freeze", action="store_true", help="write a regression fixture")
    p.add_argument("--check-fixture", action="store_true", help="compare against the stored fixture")
    common(p)
    return parser


def _threads(n: int | None):
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise ConfigurationError("--threads must be positive")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def _dispatch(args) -> int:
    if args.command == "verify":
        cfg = config_verify(args)
    else:
        cfg = validate(args.command, {"stft": config_stft, "norm": config_norm, "apply": config_apply}[args.command](args))
    if args.dry_run:
        print(json.dumps(cfg, indent=2, sort_keys=True, ensure_ascii=False))
        return EXIT_PASS
    with _threads(args.threads):
        if args.command == "stft":
            return run_stft(cfg)
        if args.command == "norm":
            return run_norm(cfg)
        if args.command == "apply":
            return run_apply(cfg)
        return run_verify(cfg, args.scenario, args.out_dir, args.freeze, args.check_fixture)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigurationError, json.JSONDecodeError) as exc:
        print(f"modcalc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as exc:
        print(f"modcalc: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
