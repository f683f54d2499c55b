"""Command-line experiment runner.

Each subcommand maps to one or more modes of :class:`ExperimentConfig`::

    simulate   -> simulate-averaged | simulate-full
    analytic   -> analytic-pdf
    stability  -> stability-diagram
    gp         -> gp-sample
    compare    -> compare
    reproduce  -> reproduce-fig3

Every run writes ``summary.json`` (deterministic given the config and
seed) and ``timings.json`` (wall-clock, the only output that varies
between identical runs) into the output directory, plus CSVs per mode and
SVGs with ``--svg``.  Errors are reported as a JSON record on stderr and
in ``error.json``, with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import io
from .analytic import bin_average, build_model, components, curve_grid, find_x_max
from .config import (
    DESK_SCALE,
    ExperimentConfig,
    apply_override,
    config_from_dict,
    config_to_dict,
    load_config,
    parse_override,
)
from .errors import ConfigError, StochMathieuError
from .gp import sample_gp
from .montecarlo import histogram_ensemble
from .sde import ALPHA_STREAM, SystemParams, sample_alpha, simulate_averaged, simulate_full
from .stability import build_diagram, leading_order_alpha_crit
from .stats import compare_densities
from .svg import PlotStyle, Series, emit_svg

SUBCOMMANDS = {
    "simulate": ("simulate-averaged", "simulate-full"),
    "analytic": ("analytic-pdf",),
    "stability": ("stability-diagram",),
    "gp": ("gp-sample",),
    "compare": ("compare",),
    "reproduce": ("reproduce-fig3",),
}


def _finite(v):
    """JSON-safe scalar: non-finite floats become ``None``."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _finite(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_finite(x) for x in v]
    return v


def _log_gauss_density(edges: np.ndarray, sd: float) -> np.ndarray:
    """Log of the mean N(0, sd**2) density per bin, accurate far into the tails."""
    lo, hi = edges[:-1] / sd, edges[1:] / sd
    # fold to the right half so tail masses come from survival functions
    a = np.where(lo >= 0, lo, np.where(hi <= 0, -hi, 0.0))
    b = np.where(lo >= 0, hi, np.where(hi <= 0, -lo, 0.0))
    la, lb = sps.norm.logsf(a), sps.norm.logsf(b)
    with np.errstate(divide="ignore"):
        tail = la + np.log1p(-np.exp(lb - la))
        straddle = np.log(sps.norm.cdf(hi) - sps.norm.cdf(lo))
    logm = np.where((lo < 0) & (hi > 0), straddle, tail)
    return logm - np.log(np.diff(edges))


def _model_fields(params: SystemParams, cfg: ExperimentConfig) -> tuple[dict, object]:
    keys = ("P_r", "eta", "T_bar", "gamma_pos", "rho")
    try:
        model = build_model(params, cfg.analytic.quad())
    except StochMathieuError as exc:
        return {k: None for k in keys} | {"model_error": str(exc)}, None
    return {k: getattr(model, k) for k in keys}, model


class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg.outputs.directory)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            probe = self.out / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {self.out} is not writable: {exc}") from exc
        self.files: list[str] = []
        self.timings: dict[str, float] = {}

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return p

    def svg(self, name: str, series, style: PlotStyle) -> None:
        if self.cfg.outputs.svg:
            self.path(name).write_text(emit_svg(series, style))

    def timed(self, key: str):
        run = self

        class _T:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[key] = run.timings.get(key, 0.0) + time.perf_counter() - self.t

        return _T()


# ---------------------------------------------------------------------------
# modes


def _density_panel(run: Run, params: SystemParams, prefix: str, title: str) -> dict:
    """Simulate, histogram, and compare one parameter set; returns its metrics."""
    cfg = run.cfg
    cc = cfg.compare
    if cc.system not in ("averaged", "full"):
        raise ConfigError(f"compare.system must be 'averaged' or 'full', got {cc.system!r}")
    with run.timed("simulate"):
        hist = histogram_ensemble(
            params, cfg.sim, cc.system, sample_interval=cc.sample_interval or None, workers=cfg.workers
        )
    emp = hist.to_density(cc.scheme, cc.n_bins, cc.core_std)
    io.write_histogram(run.path(prefix + "histogram.csv"), emp)
    metrics = {"n_samples": hist.n, "sample_std": hist.std}
    fields, model = _model_fields(params, cfg)
    if model is None:
        return fields | {"metrics": metrics}
    with run.timed("analytic"):
        ref = bin_average(emp.edges, model)
    log_gauss = _log_gauss_density(emp.edges, hist.std)
    gauss = np.exp(log_gauss)
    rep = compare_densities(emp, ref, cc.min_count)
    io.write_table(
        run.path(prefix + "comparison.csv"),
        ["bin_left", "bin_right", "count", "density_empirical", "density_analytic", "density_gaussian", "log10_ratio", "valid"],
        [emp.edges[:-1], emp.edges[1:], emp.count, emp.density, ref, gauss, rep.log10_ratio, rep.valid],
    )
    valid = rep.valid
    d = emp.density[valid]
    decades = float(math.log10(d.max() / d.min())) if d.size else 0.0
    # Gaussian fit at the outermost valid bin on each side; the smaller factor is reported
    idx = np.flatnonzero(valid)
    ends = [i for side in (idx[emp.centers[idx] < 0][:1], idx[emp.centers[idx] >= 0][-1:]) for i in side]
    factors = [(math.log(emp.density[i]) - log_gauss[i]) / math.log(10.0) for i in ends]
    metrics |= rep.to_dict() | {
        "decades_valid": decades,
        "gaussian_log10_underestimate": min(factors) if factors else None,
    }
    c = components(curve_grid(model, cfg.analytic.n_core, cfg.analytic.n_tail, x_max=max(abs(emp.edges[0]), emp.edges[-1])), model)
    io.write_curve(run.path(prefix + "curve.csv"), c)
    run.svg(
        prefix + "density.svg",
        [
            Series("simulation", emp.edges, np.where(emp.count > 0, emp.density, np.nan), kind="step", color="#444444"),
            Series("analytic total", c["x"], c["pdf_total"], color="#d62728"),
            Series("Gaussian fit", emp.centers, gauss, color="#1f77b4", dashed=True),
        ],
        PlotStyle(title=title, xlabel="x", ylabel="pdf", logy=True, log_floor=min(1e-8, 0.1 / hist.n)),
    )
    return fields | {"metrics": metrics}


def run_simulate(run: Run) -> dict:
    cfg = run.cfg
    params = cfg.params.build()
    system = "full" if cfg.mode == "simulate-full" else "averaged"
    stride = cfg.outputs.trajectory_stride
    if stride < 1:
        raise ConfigError("outputs.trajectory_stride must be >= 1")
    for i in range(min(cfg.outputs.trajectories, cfg.sim.n_realizations)):
        with run.timed("trajectories"):
            alpha = sample_alpha(params, cfg.sim, i)
            if system == "full":
                p = simulate_full(params, cfg.sim, alpha, i)
                chans = ["x", "xdot", "alpha"]
            else:
                p = simulate_averaged(params, cfg.sim, alpha, i)
                chans = ["chi1", "chi2"]
        t = p.t[::stride]
        io.write_table(run.path(f"trajectory_{i}.csv"), ["t", *chans], [t, *(p[c][::stride] for c in chans)])
    cc = cfg.compare
    with run.timed("simulate"):
        hist = histogram_ensemble(params, cfg.sim, system, sample_interval=cc.sample_interval or None, workers=cfg.workers)
    emp = hist.to_density(cc.scheme, cc.n_bins, cc.core_std)
    io.write_histogram(run.path("histogram.csv"), emp)
    fields, _ = _model_fields(params, cfg)
    metrics = {
        "n_samples": hist.n,
        "sample_std": hist.std,
        "sample_variance": hist.std**2,
        "ou_variance": params.ou_variance,
    }
    run.svg(
        "histogram.svg",
        [Series("simulation", emp.edges, np.where(emp.count > 0, emp.density, np.nan), kind="step")],
        PlotStyle(title=f"{system} system", xlabel="x", ylabel="pdf", logy=True),
    )
    return fields | {"metrics": metrics}


def run_analytic(run: Run) -> dict:
    cfg = run.cfg
    params = cfg.params.build()
    with run.timed("analytic"):
        model = build_model(params, cfg.analytic.quad())
        x_max = find_x_max(model, cfg.analytic.density_floor)
        c = components(curve_grid(model, cfg.analytic.n_core, cfg.analytic.n_tail, x_max), model)
    io.write_curve(run.path("curve.csv"), c)
    scalars = model.summary()
    io.write_scalars(run.path("model.csv"), scalars)
    run.svg(
        "pdf.svg",
        [
            Series("total", c["x"], c["pdf_total"], color="#000000"),
            Series("rare events (weighted)", c["x"], c["pdf_rare_weighted"], color="#d62728", dashed=True),
            Series("background (weighted)", c["x"], c["pdf_background_weighted"], color="#1f77b4", dashed=True),
        ],
        PlotStyle(
            title=f"sigma_alpha={params.acf.sigma_alpha:g}, ell_alpha={params.acf.ell_alpha:g}",
            xlabel="x", ylabel="pdf", logy=True, log_floor=cfg.analytic.density_floor / c["pdf_total"].max(),
        ),
    )
    fields = {k: scalars[k] for k in ("P_r", "eta", "T_bar", "gamma_pos", "rho")}
    return fields | {"metrics": {"x_max": x_max, "n_points": int(c["x"].size), "upsilon": model.upsilon}}


def run_stability(run: Run) -> dict:
    cfg = run.cfg
    sc = cfg.stability
    with run.timed("stability"):
        diag = build_diagram(
            (sc.delta_min, sc.delta_max), (sc.alpha_min, sc.alpha_max), sc.zeta,
            (sc.n_delta, sc.n_alpha), sc.trunc, sc.tol,
        )
    io.write_diagram(run.path("diagram.csv"), diag)
    io.write_boundaries(run.path("boundaries.csv"), diag)
    series = []
    colors = {1: "#1f77b4", 2: "#d62728"}
    seen = set()
    for kind, pts in diag.tongue_polygons():
        x, y = zip(*pts)
        label = "" if kind in seen else f"n={kind} tongue"
        seen.add(kind)
        series.append(Series(label, np.array(x), np.array(y), kind="polygon", color=colors.get(kind)))
    d = np.linspace(sc.delta_min, sc.delta_max, 400)
    crit = np.array([leading_order_alpha_crit(v, sc.zeta) for v in d])
    series.append(Series("leading-order n=1 edge", d, np.where(crit <= sc.alpha_max, crit, np.nan), color="#000000", dashed=True))
    run.svg(
        "stability.svg",
        series,
        PlotStyle(
            title=f"Ince-Strutt diagram, zeta={sc.zeta:g}", xlabel="delta", ylabel="alpha",
            xlim=(sc.delta_min, sc.delta_max), ylim=(sc.alpha_min, sc.alpha_max),
        ),
    )
    fields, _ = _model_fields(cfg.params.build(), cfg)
    metrics = {
        "n_unstable": int(diag.classification.sum()),
        "n_undetermined": int(diag.undetermined.sum()),
        "n_boundary_points": {str(k): len(v) for k, v in sorted(diag.boundaries.items())},
    }
    return fields | {"metrics": metrics}


def run_gp(run: Run) -> dict:
    cfg = run.cfg
    params = cfg.params.build()
    n = cfg.gp.n or cfg.sim.n_points
    with run.timed("gp"):
        path = sample_gp(params.acf, n, cfg.sim.dt, cfg.sim.master_seed, cfg.gp.realization, ALPHA_STREAM)
    io.write_trajectory(run.path("gp.csv"), path)
    a = path["alpha"]
    step = max(1, a.size // 5000)
    run.svg(
        "gp.svg",
        [Series("alpha(t)", path.t[::step], a[::step])],
        PlotStyle(title="excitation sample", xlabel="t", ylabel="alpha"),
    )
    fields, _ = _model_fields(params, cfg)
    metrics = {"n": int(a.size), "sample_variance": float(np.mean(a * a)), "target_variance": params.acf.sigma_alpha**2}
    return fields | {"metrics": metrics}


def run_compare(run: Run) -> dict:
    params = run.cfg.params.build()
    title = f"sigma_alpha={params.acf.sigma_alpha:g}, ell_alpha={params.acf.ell_alpha:g}"
    return _density_panel(run, params, "", title)


def run_reproduce(run: Run) -> dict:
    cfg = run.cfg
    panels = []
    for s in cfg.compare.sigma_grid:
        for ell in cfg.compare.ell_grid:
            params = cfg.params.build(sigma_alpha=s, ell_alpha=ell)
            prefix = f"panel_s{s:g}_l{ell:g}/"
            try:
                res = _density_panel(run, params, prefix, f"sigma_alpha={s:g}, ell_alpha={ell:g}")
            except StochMathieuError as exc:
                raise type(exc)(f"panel sigma_alpha={s:g}, ell_alpha={ell:g}: {exc}") from exc
            panels.append({"sigma_alpha": s, "ell_alpha": ell} | res)
    keys = ["sigma_alpha", "ell_alpha", "P_r", "eta", "T_bar", "gamma_pos", "rho"]
    mkeys = ["max_abs_log10_ratio", "decades_valid", "gaussian_log10_underestimate", "l1_core", "log_ratio_tail", "n_valid_bins", "n_samples"]
    cols = [[p[k] if p[k] is not None else math.nan for p in panels] for k in keys]
    cols += [[p["metrics"].get(k, math.nan) if p["metrics"].get(k) is not None else math.nan for p in panels] for k in mkeys]
    io.write_table(run.path("panels.csv"), keys + mkeys, [np.asarray(c, dtype=float) for c in cols])
    base = cfg.params.build()
    fields, _ = _model_fields(base, cfg)
    return fields | {"metrics": {"panels": panels}}


HANDLERS = {
    "simulate-full": run_simulate,
    "simulate-averaged": run_simulate,
    "analytic-pdf": run_analytic,
    "stability-diagram": run_stability,
    "gp-sample": run_gp,
    "compare": run_compare,
    "reproduce-fig3": run_reproduce,
}


def run(cfg: ExperimentConfig) -> dict:
    """Execute ``cfg`` and write its artifacts; returns the summary document."""
    r = Run(cfg)
    t0 = time.perf_counter()
    result = HANDLERS[cfg.mode](r)
    r.timings["total"] = time.perf_counter() - t0
    summary = _finite({"mode": cfg.mode} | result | {"files": sorted(r.files), "timings": "timings.json", "config": config_to_dict(cfg)})
    io.write_json(r.out / "summary.json", summary)
    io.write_json(r.out / "timings.json", _finite(r.timings))
    summary["timings"] = _finite(r.timings)
    return summary


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides sim.master_seed)")
    common.add_argument("--out", help="output directory (overrides outputs.directory)")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--desk-scale", action="store_true", help="300 realizations, t_end=2500")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override, e.g. params.acf.sigma_alpha=0.267")
    p = argparse.ArgumentParser(prog="stochmathieu", description="Stochastic Mathieu oscillator experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "simulate":
            sp.add_argument("--system", choices=["averaged", "full"], help="which equations to integrate")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_config(args.config) if args.config else {}
    allowed = SUBCOMMANDS[args.command]
    mode = data.get("mode")
    if getattr(args, "system", None):
        mode = f"simulate-{args.system}"
    if mode is None:
        mode = allowed[0]
    if mode not in allowed:
        raise ConfigError(f"mode {mode!r} does not belong to subcommand {args.command!r}")
    data = apply_override(data, "mode", mode)
    if args.desk_scale:
        for k, v in DESK_SCALE.items():
            data = apply_override(data, f"sim.{k}", v)
    for text in args.set:
        key, value = parse_override(text)
        data = apply_override(data, key, value)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        data = apply_override(data, "sim.master_seed", args.seed)
    if args.out:
        data = apply_override(data, "outputs.directory", args.out)
    if args.svg:
        data = apply_override(data, "outputs.svg", True)
    if args.workers is not None:
        data = apply_override(data, "workers", args.workers)
    return config_from_dict(data)


def _report(summary: dict) -> str:
    lines = [f"mode: {summary['mode']}"]
    for k in ("P_r", "eta", "T_bar", "gamma_pos", "rho"):
        if summary.get(k) is not None:
            lines.append(f"{k}: {summary[k]:.6g}")
    m = summary.get("metrics", {})
    for p in m.get("panels", []):
        pm = p["metrics"]
        lines.append(
            f"panel sigma_alpha={p['sigma_alpha']:g} ell_alpha={p['ell_alpha']:g}: "
            f"P_r={p['P_r']:.4g} max|log10 ratio|={pm.get('max_abs_log10_ratio')} decades={pm.get('decades_valid')}"
        )
    for k, v in m.items():
        if k != "panels":
            lines.append(f"{k}: {v}")
    lines.append(f"runtime: {summary['timings']['total']:.2f} s")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    try:
        cfg = resolve_config(args)
        summary = run(cfg)
    except (StochMathieuError, ValueError) as exc:
        record = {
            "error": type(exc).__name__,
            "message": str(exc),
            "mode": cfg.mode if cfg else None,
            "command": args.command,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        out = Path(cfg.outputs.directory if cfg else (args.out or "."))
        try:
            if out.is_dir():
                io.write_json(out / "error.json", record)
        except OSError:
            pass
        return 2 if isinstance(exc, ConfigError) else 1
    print(_report(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
