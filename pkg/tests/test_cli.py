import json
import shutil
import subprocess

import mpmath
import numpy as np
import pytest

from modcalc.cli import main, parse_quantization, parse_window, resolve_weight, validate
from modcalc.errors import ConfigurationError
from modcalc.fieldio import read_field, write_field
from modcalc.lattice import SampledField, UniformGrid
from modcalc.pdo import symbol_from_json, symbol_to_field
from modcalc.stft import Window, stft, stft_decay_fit
from modcalc.weights import one

GRID = UniformGrid.box(12.0, 128)


@pytest.fixture
def files(tmp_path):
    """Gaussian, indicator and zero fields written to disk."""
    gauss = SampledField.from_function(GRID, lambda x: np.exp(-(x**2) / 2))
    fine = UniformGrid.box(8.0, 128)
    ind = np.zeros(fine.shape)
    ind[60:68] = 1.0  # eight cells of width 1/8
    out = {}
    for name, f in {"g": gauss, "ind": SampledField(fine, ind), "zero": SampledField.zeros(GRID)}.items():
        out[name] = tmp_path / f"{name}.fld"
        write_field(out[name], f)
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


# -- stft ----------------------------------------------------------------------------


def test_stft_writes_outputs(files, tmp_path, capsys):
    out = tmp_path / "g.stft"
    code, _ = run(capsys, "stft", "--input", files["g"], "--window", "gaussian:1.0", "--out", out)
    assert code == 0 and out.exists()
    summary = json.loads((tmp_path / "g.stft.json").read_text())
    S, blocks = read_field(out)
    assert "STFT" in blocks and S.grid.dim == 2
    assert summary["peak"]["location"] == pytest.approx([0.0, 0.0], abs=S.grid.steps[0])
    # energy of V f equals ||f||^2 ||phi||^2
    assert summary["energy"] == pytest.approx(np.sqrt(np.pi), rel=1e-8)


def test_stft_missing_input(tmp_path, capsys):
    code, err = run(capsys, "stft", "--input", tmp_path / "nope.fld", "--out", tmp_path / "x.stft")
    assert code == 2 and "not found" in err.err


def test_stft_decay_fit_matches_library(files, tmp_path, capsys):
    out = tmp_path / "g.stft"
    code, _ = run(capsys, "stft", "--input", files["g"], "--out", out, "--fit-decay", "s=1", "weight=one")
    assert code == 0
    fit = json.loads((tmp_path / "g.stft.json").read_text())["decay_fit"]
    f, _ = read_field(files["g"])
    ref = stft_decay_fit(stft(f, Window.gaussian(1.0)), one(1), 1.0).to_json()
    assert fit == json.loads(json.dumps(ref))


def test_stft_fit_on_zero_field_is_numeric_error(files, tmp_path, capsys):
    code, err = run(capsys, "stft", "--input", files["zero"], "--out", tmp_path / "z.stft", "--fit-decay", "s=1")
    assert code == 3 and "numeric" in err.err


def test_stft_bad_window_and_keys(files, tmp_path, capsys):
    assert run(capsys, "stft", "--input", files["g"], "--out", tmp_path / "a", "--window", "boxcar:1")[0] == 2
    assert run(capsys, "stft", "--input", files["g"], "--out", tmp_path / "a", "--fit-decay", "q=1")[0] == 2


# -- norm ------------------------------------------------------------------------------


@pytest.mark.parametrize("exps", ["1", "2", "0.5", "inf"])
def test_norm_indicator(files, capsys, exps):
    code, out = run(capsys, "norm", "--input", files["ind"], "--exponents", exps)
    assert code == 0
    assert out.out.splitlines()[0] == "1.000000000000"


def test_norm_gaussian_modulation_matches_quadrature(files, capsys):
    code, out = run(capsys, "norm", "--input", files["g"], "--exponents", "2,2", "--modulation")
    assert code == 0
    lines = out.out.splitlines()
    fnorm = float(mpmath.sqrt(mpmath.quad(lambda t: mpmath.exp(-(t**2)), [-mpmath.inf, mpmath.inf])))
    assert float(lines[0]) == pytest.approx(fnorm * Window.gaussian(1.0).norm(), abs=5e-12)
    echo = json.loads(lines[1])
    assert echo["norm"]["exponents"] == [2.0, 2.0] and echo["window"]["sigma"] == 1.0


def test_norm_invalid_exponent(files, capsys):
    assert run(capsys, "norm", "--input", files["g"], "--exponents", "0")[0] == 2
    assert run(capsys, "norm", "--input", files["g"], "--exponents", "two")[0] == 2
    assert run(capsys, "norm", "--input", files["g"], "--exponents", "2,2")[0] == 2


def test_norm_weight_and_basis_options(files, capsys):
    code, out = run(capsys, "norm", "--input", files["g"], "--exponents", "inf,1", "--modulation",
                    "--basis", "permuted:1,0", "--weight", '{"form": "polynomial", "t": 1.0, "dim": 2}')
    assert code == 0 and float(out.out.splitlines()[0]) > 0
    assert run(capsys, "norm", "--input", files["g"], "--exponents", "2", "--weight", "nonsense")[0] == 2


# -- apply ------------------------------------------------------------------------------


def _apply(capsys, files, tmp_path, *extra, name="out.fld"):
    out = tmp_path / name
    code, _ = run(capsys, "apply", "--input", files["g"], "--out", out, *extra)
    return code, (read_field(out)[0] if code == 0 else None)


def test_apply_identity_symbol(files, tmp_path, capsys):
    code, g = _apply(capsys, files, tmp_path, "--symbol", "1")
    assert code == 0
    f, _ = read_field(files["g"])
    assert np.max(np.abs(g.values - f.values)) < 1e-10


def test_apply_weyl_against_kohn_nirenberg(files, tmp_path, capsys):
    _, weyl = _apply(capsys, files, tmp_path, "--symbol", "x*xi", "--quantization", "weyl", name="w.fld")
    _, kn = _apply(capsys, files, tmp_path, "--symbol", "x*xi - I/2", "--quantization", "kn", name="k.fld")
    _, kn_plus = _apply(capsys, files, tmp_path, "--symbol", "x*xi + I/2", "--quantization", "kn", name="p.fld")
    scale = np.max(np.abs(weyl.values))
    assert np.max(np.abs(weyl.values - kn.values)) < 1e-10 * scale
    # the opposite sign shifts by i f
    assert np.max(np.abs(weyl.values - kn_plus.values)) > 0.1 * scale


def test_apply_matrix_quantization_and_quadrature(files, tmp_path, capsys):
    code, m = _apply(capsys, files, tmp_path, "--symbol", "x*xi", "--quantization", "matrix:0.5", name="m.fld")
    _, w = _apply(capsys, files, tmp_path, "--symbol", "x*xi", "--quantization", "weyl", name="w.fld")
    assert code == 0 and np.max(np.abs(m.values - w.values)) < 1e-12
    code, q = _apply(capsys, files, tmp_path, "--symbol", "exp(-x**2/2 - xi**2/3)", "--method", "quadrature",
                     name="q.fld")
    _, fast = _apply(capsys, files, tmp_path, "--symbol", "exp(-x**2/2 - xi**2/3)", name="f.fld")
    assert code == 0 and np.linalg.norm(q.values - fast.values) < 1e-6 * np.linalg.norm(fast.values)


def test_apply_symbol_field_on_mismatched_grid(files, tmp_path, capsys):
    other = UniformGrid.box(8.0, 32).phase_space()
    fld, blocks = symbol_to_field(symbol_from_json({"kind": "gaussian_envelope", "widths": [1, 1]}), other)
    path = tmp_path / "a.sym"
    write_field(path, fld, {"SYMB": {"kind": "sampled"}})
    code, err = run(capsys, "apply", "--input", files["g"], "--out", tmp_path / "o.fld", "--symbol-field", path)
    assert code == 2 and "grid" in err.err


def test_apply_needs_exactly_one_symbol(files, tmp_path, capsys):
    assert run(capsys, "apply", "--input", files["g"], "--out", tmp_path / "o.fld")[0] == 2
    assert run(capsys, "apply", "--input", files["g"], "--out", tmp_path / "o.fld", "--symbol", "1",
               "--symbol-field", files["g"])[0] == 2
    assert run(capsys, "apply", "--input", files["g"], "--out", tmp_path / "o.fld", "--symbol", "y*xi")[0] == 2


# -- verify ----------------------------------------------------------------------------------


def _config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


TRIVIAL_P32 = {"symbol": {"kind": "constant", "c": 1.0}, "omega0": {"form": "one", "dim": 2}}


def test_verify_trivial_p32(tmp_path, capsys):
    out = tmp_path / "reports"
    code, o = run(capsys, "verify", "p32", "--config", _config(tmp_path, TRIVIAL_P32), "--out-dir", out)
    assert code == 0 and "PASS" in o.out
    rep = json.loads((out / "p32.json").read_text())
    assert rep["status"] == "PASS" and abs(rep["report"]["max_ratio"] - 1) < 1e-10
    rows = (out / "p32.csv").read_text().splitlines()
    assert rows[0] == "index,ratio,source_norm,target_norm" and len(rows) == 1 + 8
    assert "written_at" in json.loads((out / "p32.timestamp.json").read_text())


def test_verify_reports_are_byte_identical(tmp_path, capsys):
    cfg = _config(tmp_path, TRIVIAL_P32)
    run(capsys, "verify", "p32", "--config", cfg, "--out-dir", tmp_path / "a")
    run(capsys, "--threads", "1", "verify", "p32", "--config", cfg, "--out-dir", tmp_path / "b")
    for name in ("p32.json", "p32.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_kernel(tmp_path, capsys):
    cfg = _config(tmp_path, {"symbol": {"kind": "expression", "expr": "xi"}}, "k1.json")
    code, _ = run(capsys, "verify", "kernel", "--config", cfg, "--out-dir", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "kernel.json").read_text())
    assert rep["extra"]["deviation"] < 1e-4
    assert (tmp_path / "kernel.csv").read_text().startswith("key,value")


def test_verify_non_phase_split_is_inapplicable(tmp_path, capsys):
    cfg = _config(tmp_path, {"basis": [[1, 1], [0, 1]]})
    code, o = run(capsys, "verify", "opcont3", "--config", cfg, "--out-dir", tmp_path)
    assert code == 4 and "INAPPLICABLE" in o.out


@pytest.mark.parametrize(
    "obj",
    [{"bogus": 1}, {"ladder": "128"}, {"ensemble": {"kind": "gaussian_chirps", "count": 4, "colour": 1}}, [1, 2]],
)
def test_verify_rejects_bad_configs(tmp_path, capsys, obj):
    code, err = run(capsys, "verify", "p32", "--config", _config(tmp_path, obj), "--out-dir", tmp_path)
    assert code == 2 and "configuration error" in err.err
    assert not (tmp_path / "p32.json").exists()


def test_verify_unknown_scenario_and_missing_config(tmp_path, capsys):
    assert run(capsys, "verify", "theorem9", "--out-dir", tmp_path)[0] == 2
    assert run(capsys, "verify", "p32", "--config", tmp_path / "none.json", "--out-dir", tmp_path)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", "p32", "--config", bad, "--out-dir", tmp_path)[0] == 2


def test_verify_fixture_round_trip(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MODCALC_FIXTURES", str(tmp_path / "fx"))
    cfg = _config(tmp_path, {"symbol": {"kind": "expression", "expr": "xi"}, "N": 128})
    code, o = run(capsys, "verify", "kernel", "--config", cfg, "--out-dir", tmp_path, "--check-fixture")
    assert code == 0 and "fixture: missing" in o.out
    run(capsys, "verify", "kernel", "--config", cfg, "--out-dir", tmp_path, "--freeze")
    assert list((tmp_path / "fx").glob("kernel-*.json"))
    code, o = run(capsys, "verify", "kernel", "--config", cfg, "--out-dir", tmp_path, "--check-fixture")
    assert code == 0 and "fixture: match" in o.out


# -- dry run and validation -------------------------------------------------------------------


def test_dry_run_prints_defaults_without_writing(files, tmp_path, capsys):
    code, o = run(capsys, "verify", "sobolev", "--dry-run", "--out-dir", tmp_path / "r")
    cfg = json.loads(o.out)
    assert code == 0 and cfg["r"] == 0.3 and cfg["ladder"] == [128, 192, 256]
    assert not (tmp_path / "r").exists()
    code, o = run(capsys, "stft", "--input", files["g"], "--out", tmp_path / "s", "--dry-run")
    cfg = json.loads(o.out)
    assert code == 0 and cfg["window"]["kind"] == "gaussian" and cfg["stride"] == 1
    assert not (tmp_path / "s").exists()
    for argv in (["norm", "--input", files["g"], "--exponents", "2"],
                 ["apply", "--input", files["g"], "--out", tmp_path / "o", "--symbol", "xi"]):
        code, o = run(capsys, *argv, "--dry-run")
        assert code == 0 and isinstance(json.loads(o.out), dict)


def test_validate_rejects_unknown_keys():
    with pytest.raises(ConfigurationError):
        validate("norm", {"input": "a", "exponents": [2], "basis": "identity", "weight": None,
                          "modulation": False, "window": {"kind": "gaussian", "sigma": 1.0}, "extra": 1})


def test_parsers():
    assert parse_window("gaussian:2")["sigma"] == 2.0
    assert parse_window("hermite:3:1.5")["order"] == 3
    with pytest.raises(ConfigurationError):
        parse_window("gaussian:-1")
    assert np.allclose(parse_quantization("weyl"), [[0.5]])
    assert np.allclose(parse_quantization("kn", 2), np.zeros((2, 2)))
    assert np.allclose(parse_quantization("matrix:1,0,0,0.5", 2), [[1, 0], [0, 0.5]])
    with pytest.raises(ConfigurationError):
        parse_quantization("matrix:1,2,3")
    assert resolve_weight("one", 3).dim == 3
    assert resolve_weight(None, 2) is None


def test_threads_must_be_positive(files, capsys):
    assert run(capsys, "--threads", "0", "norm", "--input", files["g"], "--exponents", "2")[0] == 2


def test_missing_required_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["stft"])
    assert exc.value.code == 2


@pytest.mark.skipif(shutil.which("modcalc") is None, reason="console script not installed")
def test_console_script(files):
    res = subprocess.run(["modcalc", "norm", "--input", str(files["ind"]), "--exponents", "2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.splitlines()[0] == "1.000000000000"
