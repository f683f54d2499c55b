import json
import math

import numpy as np
import pytest

from stochmathieu import io
from stochmathieu.cli import main, resolve_config, build_parser
from stochmathieu.config import (
    ExperimentConfig,
    apply_override,
    config_from_dict,
    config_to_dict,
    load_config,
    parse_override,
)
from stochmathieu.errors import ConfigError, EmptyInput
from stochmathieu.svg import PlotStyle, Series, emit_svg

SMALL_SIM = ["--set", "sim.n_realizations=2", "--set", "sim.t_end=560", "--set", "sim.burn_in=500"]
SMALL_STAB = ["--set", "stability.n_delta=12", "--set", "stability.n_alpha=10"]


def cli(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def summary(out):
    return json.loads((out / "summary.json").read_text())


# --- configuration ---------------------------------------------------------


def test_defaults_roundtrip():
    cfg = ExperimentConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg
    assert cfg.sim.dt == 0.005 and cfg.sim.t_end == 5500 and cfg.sim.burn_in == 500
    assert cfg.sim.n_realizations == 3000
    assert cfg.params.zeta == 0.1 and cfg.params.forcing.nu == 0.002


@pytest.mark.parametrize(
    "doc",
    [
        {"bogus": 1},
        {"params": {"acf": {"sigma": 0.2}}},
        {"sim": {"dt": "small"}},
        {"sim": {"n_realizations": 2.5}},
        {"outputs": {"svg": 1}},
        {"mode": "sing"},
        {"workers": 0},
        {"params": {"forcing": {"kind": "pink"}}},
    ],
)
def test_config_rejects(doc):
    with pytest.raises(ConfigError):
        cfg = config_from_dict(doc)
        cfg.params.build()


def test_overrides():
    assert parse_override("params.acf.sigma_alpha=0.267") == ("params.acf.sigma_alpha", 0.267)
    assert parse_override("compare.system=full") == ("compare.system", "full")
    assert parse_override("compare.ell_grid=[5, 10]")[1] == [5, 10]
    with pytest.raises(ConfigError):
        parse_override("nothing")
    d = apply_override({}, "a.b.c", 1)
    assert d == {"a": {"b": {"c": 1}}}
    with pytest.raises(ConfigError):
        apply_override({"a": 3}, "a.b", 1)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1]")
    with pytest.raises(ConfigError):
        load_config(arr)


def test_flag_precedence(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"mode": "simulate-full", "sim": {"master_seed": 5, "n_realizations": 7}}))
    args = build_parser().parse_args(
        ["simulate", "--config", str(f), "--seed", "9", "--desk-scale", "--set", "sim.t_end=900", "--out", "o"]
    )
    cfg = resolve_config(args)
    assert cfg.mode == "simulate-full"
    assert cfg.sim.master_seed == 9
    assert cfg.sim.n_realizations == 300
    assert cfg.sim.t_end == 900
    assert cfg.outputs.directory == "o"


def test_mode_must_match_subcommand(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"mode": "compare"}))
    args = build_parser().parse_args(["analytic", "--config", str(f)])
    with pytest.raises(ConfigError):
        resolve_config(args)


# --- modes -----------------------------------------------------------------


def test_analytic_middle_regime(tmp_path, capsys):
    code, out = cli(tmp_path, "analytic", "--svg")
    assert code == 0
    assert "P_r: 0.0492" in capsys.readouterr().out
    s = summary(out)
    assert s["P_r"] == pytest.approx(0.0488, rel=0.02)
    assert s["timings"] == "timings.json"
    assert set(s["files"]) == {"curve.csv", "model.csv", "pdf.svg"}
    # summary numbers are the CSV numbers, bit for bit
    model = io.read_scalars(out / "model.csv")
    for k in ("P_r", "eta", "T_bar", "gamma_pos", "rho"):
        assert s[k] == model[k]
    curve = io.read_table(out / "curve.csv")
    assert s["metrics"]["n_points"] == curve["x"].size
    assert s["metrics"]["x_max"] == curve["x"][-1]
    svg = (out / "pdf.svg").read_text()
    for label in ("total", "rare events (weighted)", "background (weighted)"):
        assert f">{label}</text>" in svg


def test_gp_zero_variance(tmp_path):
    code, out = cli(tmp_path, "gp", "--set", "params.acf.sigma_alpha=0", "--set", "gp.n=512")
    assert code == 0
    g = io.read_table(out / "gp.csv")
    assert g["alpha"].size == 512
    assert np.all(g["alpha"] == 0.0)


def test_gp_sample_variance(tmp_path):
    code, out = cli(tmp_path, "gp", "--set", "gp.n=200000", "--set", "params.acf.ell_alpha=2")
    s = summary(out)
    assert s["metrics"]["sample_variance"] == pytest.approx(0.229**2, rel=0.15)
    g = io.read_table(out / "gp.csv")
    assert s["metrics"]["sample_variance"] == pytest.approx(float(np.mean(g["alpha"] ** 2)), rel=1e-12)


def test_stability_svg_has_both_tongues(tmp_path):
    code, out = cli(tmp_path, "stability", "--svg", *SMALL_STAB)
    assert code == 0
    svg = (out / "stability.svg").read_text()
    assert svg.count("<polygon") >= 2
    assert ">n=1 tongue</text>" in svg and ">n=2 tongue</text>" in svg
    d = io.read_table(out / "diagram.csv")
    assert int(d["unstable"].sum()) == summary(out)["metrics"]["n_unstable"]


@pytest.mark.parametrize("system", ["averaged", "full"])
def test_simulate(tmp_path, system):
    code, out = cli(tmp_path, "simulate", "--system", system, *SMALL_SIM)
    assert code == 0
    s = summary(out)
    assert s["mode"] == f"simulate-{system}"
    tr = io.read_table(out / "trajectory_0.csv")
    assert tr["t"][0] == 0.0
    h = io.read_table(out / "histogram.csv")
    assert int(h["count"].sum()) == s["metrics"]["n_samples"]


def test_compare_outputs(tmp_path):
    code, out = cli(tmp_path, "compare", "--svg", *SMALL_SIM)
    assert code == 0
    m = summary(out)["metrics"]
    c = io.read_table(out / "comparison.csv")
    valid = c["valid"].astype(bool)
    assert int(valid.sum()) == m["n_valid_bins"]
    assert np.nanmax(np.abs(c["log10_ratio"][valid])) == m["max_abs_log10_ratio"]
    svg = (out / "density.svg").read_text()
    for label in ("simulation", "analytic total", "Gaussian fit"):
        assert f">{label}</text>" in svg


# --- determinism and errors ------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ["analytic", "--svg"],
        ["stability", "--svg", *SMALL_STAB],
        ["gp", "--svg", "--set", "gp.n=4096"],
        ["simulate", "--svg", *SMALL_SIM],
        ["compare", "--svg", *SMALL_SIM],
    ],
    ids=lambda a: a[0],
)
def test_rerun_bit_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*argv, "--out", str(a)]) == 0
    assert main([*argv, "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir() if p.name != "timings.json")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "timings.json")
    for n in names:
        if n == "summary.json":
            sa, sb = summary(a), summary(b)
            sa["config"]["outputs"].pop("directory")
            sb["config"]["outputs"].pop("directory")
            assert sa == sb
        else:
            assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_seed_changes_output(tmp_path):
    main(["gp", "--set", "gp.n=256", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["gp", "--set", "gp.n=256", "--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "gp.csv").read_bytes() != (tmp_path / "b" / "gp.csv").read_bytes()


def test_config_error_record(tmp_path, capsys):
    code, out = cli(tmp_path, "analytic", "--set", "params.acf.bogus=1")
    assert code == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["error"] == "ConfigError" and "bogus" in rec["message"]


def test_invalid_regime_record(tmp_path, capsys):
    code, out = cli(tmp_path, "analytic", "--set", "params.acf.sigma_alpha=3.0")
    assert code == 1
    rec = json.loads(capsys.readouterr().err)
    assert rec["error"] == "InvalidRegime"
    assert rec["mode"] == "analytic-pdf"
    assert json.loads((out / "error.json").read_text()) == rec


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["analytic", "--out", str(blocker / "sub")])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"


# --- svg -------------------------------------------------------------------


def test_svg_deterministic_and_empty():
    x = np.linspace(-3, 3, 50)
    s = [Series("a", x, np.exp(-x * x)), Series("b", x, np.exp(-np.abs(x)), dashed=True)]
    style = PlotStyle(logy=True, title="t")
    assert emit_svg(s, style) == emit_svg(s, style)
    assert emit_svg(s, style).startswith("<svg")
    with pytest.raises(EmptyInput):
        emit_svg([])
    with pytest.raises(EmptyInput):
        emit_svg([Series("z", x, np.zeros_like(x))], PlotStyle(logy=True))
    with pytest.raises(ValueError):
        Series("bad", x, x[:-1])
    with pytest.raises(ValueError):
        emit_svg([Series("st", x, x, kind="step")])


def test_svg_gaps_not_bridged():
    x = np.arange(6.0)
    y = np.array([1.0, 2.0, math.nan, 3.0, 4.0, 5.0])
    assert emit_svg([Series("g", x, y)]).count("<polyline") == 2
