"""Command-line entry point: ``hullscope {run,curve,project,gen,fit}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import (
    SyntheticSpec,
    dumps_record,
    gen_synthetic,
    read_points_csv,
    write_csv,
    write_libsvm,
    write_points_csv,
    write_run,
)
from .errors import ConfigError, HullscopeError
from .geometry import pca_project_2d
from .pipeline import RunConfig, build_model, curve, fit_optimum, run

log = logging.getLogger("hullscope")

SEED_ENV = "HULLSCOPE_SEED"

# flag name (without dashes) -> RunConfig field
_RUN_FIELDS = {
    "data": "data",
    "format": "format",
    "demo": "demo",
    "synthetic": "synthetic",
    "p": "p",
    "epsilon": "epsilon",
    "noise-sd": "noise_sd",
    "label-column": "label_column",
    "loss": "loss",
    "scale": "scale",
    "lambda": "lam",
    "nu": "nu",
    "nu-factor": "nu_factor",
    "nu-offset": "nu_offset",
    "M": "M",
    "K": "K",
    "Mprime": "Mprime",
    "seed": "seed",
    "tol-nu": "tol_nu",
    "qp-tol": "qp_tol",
    "solver-tol": "solver_tol",
    "max-iter": "max_iter",
    "workers": "workers",
}


_CONFIG_KEYS = set(_RUN_FIELDS) | {"K-grid", "M-grid", "no-naive", "out", "points", "reference"}


def _grid(text: str):
    """``5,10,20`` or ``start:stop:step`` (inclusive stop)."""
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            vals = list(range(start, stop + 1, step))
        else:
            vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use 1,2,3 or start:stop:step") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"grid {text!r} must list positive integers")
    return vals


def _add_source_flags(ap):
    S = argparse.SUPPRESS
    g = ap.add_argument_group("data source")
    g.add_argument("--data", default=S, help="dataset file")
    g.add_argument("--format", choices=["libsvm", "csv"], default=S, help="dataset file format (default libsvm)")
    g.add_argument("--label-column", dest="label-column", type=int, default=S, help="label column for csv input (default last)")
    g.add_argument("--demo", choices=["example2d", "example3d"], default=S, help="built-in two/three variable example")
    g.add_argument("--synthetic", choices=["correlated"], default=S, help="synthetic correlated regression problem")
    g.add_argument("--p", type=int, default=S, help="dimension of the synthetic problem")
    g.add_argument("--epsilon", type=float, default=S, help="perturbation of the demo design, also the demo level offset")
    g.add_argument("--noise-sd", dest="noise-sd", type=float, default=S, help="noise standard deviation for synthetic data")
    g.add_argument("--seed", type=int, default=S, help=f"master seed (fallback: ${SEED_ENV}, then 0)")


def _add_model_flags(ap):
    S = argparse.SUPPRESS
    g = ap.add_argument_group("model")
    g.add_argument("--loss", choices=["squared", "logistic"], default=S)
    g.add_argument("--scale", choices=["mean", "sum"], default=S, help="loss averaged over rows or summed")
    g.add_argument("--lambda", dest="lambda", type=float, default=S, help="L1 penalty weight")
    g.add_argument("--solver-tol", dest="solver-tol", type=float, default=S)
    g.add_argument("--max-iter", dest="max-iter", type=int, default=S)


def _add_level_flags(ap):
    S = argparse.SUPPRESS
    g = ap.add_argument_group("level set and sampling")
    g.add_argument("--nu", type=float, default=S, help="absolute level")
    g.add_argument("--nu-factor", dest="nu-factor", type=float, default=S, help="level = factor * optimum (default 1.01)")
    g.add_argument("--nu-offset", dest="nu-offset", type=float, default=S, help="level = optimum + offset")
    g.add_argument("--M", type=int, default=S, help="number of sampled extreme points")
    g.add_argument("--K", type=int, default=S, help="number of selected points")
    g.add_argument("--Mprime", type=int, default=S, help="size of the evaluation sample")
    g.add_argument("--tol-nu", dest="tol-nu", type=float, default=S, help="relative boundary tolerance")
    g.add_argument("--qp-tol", dest="qp-tol", type=float, default=S, help="hull projection tolerance")
    g.add_argument("--workers", type=int, default=S, help="worker threads (default: available CPUs)")


def _common(ap, out_help):
    ap.add_argument("--config", default=None, help="JSON file whose keys mirror flag names; flags win")
    ap.add_argument("--out", default=argparse.SUPPRESS, help=out_help)
    ap.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hullscope", description="Convex hull approximation of near-optimal lasso and logistic solutions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="fit, sample, select and evaluate")
    _add_source_flags(p)
    _add_model_flags(p)
    _add_level_flags(p)
    _common(p, "output directory for run.json, selected.csv, cloud.csv (default: JSON to stdout)")

    p = sub.add_parser("curve", help="distance vs K for several cloud sizes, lazy and naive eval counts")
    _add_source_flags(p)
    _add_model_flags(p)
    _add_level_flags(p)
    p.add_argument("--K-grid", dest="K-grid", type=_grid, default=argparse.SUPPRESS, help="e.g. 5:50:5 or 1,2,4")
    p.add_argument("--M-grid", dest="M-grid", type=_grid, default=argparse.SUPPRESS, help="e.g. 200,1000")
    p.add_argument("--no-naive", dest="no-naive", action="store_true", default=argparse.SUPPRESS, help="skip the naive selector")
    _common(p, "output JSON file (default: stdout)")

    p = sub.add_parser("project", help="project points onto their top two principal axes")
    p.add_argument("--points", default=argparse.SUPPRESS, help="CSV of points, one per row")
    p.add_argument("--reference", default=argparse.SUPPRESS, help="CSV defining the axes (default: the points)")
    _common(p, "output CSV (default: stdout)")

    p = sub.add_parser("gen", help="write a synthetic dataset")
    _add_source_flags(p)
    _common(p, "output dataset file (required)")

    p = sub.add_parser("fit", help="compute the regularized optimum only")
    _add_source_flags(p)
    _add_model_flags(p)
    _common(p, "output JSON file (default: stdout)")
    return ap


def _key(name: str) -> str:
    return name.lstrip("-").replace("_", "-")


def merged_options(args: argparse.Namespace) -> dict:
    """Config-file values overlaid by explicit flags; seed falls back to the environment."""
    opts = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in raw.items():
            key = _key(k)
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {k!r}")
            if key in ("K-grid", "M-grid") and isinstance(v, str):
                try:
                    v = _grid(v)
                except argparse.ArgumentTypeError as exc:
                    raise ConfigError(str(exc)) from None
            opts[key] = v
    for k, v in vars(args).items():
        if k not in ("command", "config", "verbose"):
            opts[k] = v
    if "seed" not in opts:
        env = os.environ.get(SEED_ENV)
        if env is not None and env.strip():
            try:
                opts["seed"] = int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    return opts


def run_config(opts: dict, default_workers: bool = True) -> RunConfig:
    kw = {_RUN_FIELDS[k]: v for k, v in opts.items() if k in _RUN_FIELDS}
    if "workers" not in kw and default_workers:
        kw["workers"] = os.cpu_count() or 1
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _emit_json(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_run(opts: dict) -> int:
    cfg = run_config(opts)
    res = run(cfg)
    out = opts.get("out")
    if out is None:
        sys.stdout.write(dumps_record(res.record))
        return 0
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    write_run(res.record, d / "run.json")
    write_points_csv(res.selected, d / "selected.csv")
    if len(res.cloud):
        write_points_csv(res.cloud.betas, d / "cloud.csv")
    log.info("wrote %s", d)
    return 0


def cmd_curve(opts: dict) -> int:
    cfg = run_config(opts)
    k_grid = opts.get("K-grid") or list(range(1, cfg.K + 1))
    m_grid = opts.get("M-grid") or [cfg.M]
    report = curve(cfg, k_grid, m_grid, naive=not opts.get("no-naive", False))
    _emit_json(dumps_record(report), opts.get("out"))
    return 0


def cmd_project(opts: dict) -> int:
    if "points" not in opts:
        raise ConfigError("--points is required")
    pts = read_points_csv(opts["points"])
    ref = read_points_csv(opts["reference"]) if opts.get("reference") else None
    if ref is not None and ref.shape[1] != pts.shape[1]:
        raise ConfigError(f"reference has {ref.shape[1]} columns, points have {pts.shape[1]}")
    proj = pca_project_2d(pts, ref)
    out = opts.get("out")
    write_points_csv(proj, out if out is not None else sys.stdout)
    return 0


def cmd_gen(opts: dict) -> int:
    out = opts.get("out")
    if out is None:
        raise ConfigError("gen needs --out")
    family = opts.get("demo") or opts.get("synthetic")
    if family is None or ("demo" in opts and "synthetic" in opts):
        raise ConfigError("gen needs exactly one of --demo or --synthetic")
    spec = SyntheticSpec(
        family,
        p=opts.get("p"),
        epsilon=opts.get("epsilon", 1.0 / 40.0),
        noise_sd=opts.get("noise-sd", 0.1),
        seed=opts.get("seed", 0),
    )
    dataset, _ = gen_synthetic(spec)
    fmt = opts.get("format", "libsvm")
    (write_csv if fmt == "csv" else write_libsvm)(dataset, out)
    return 0


def cmd_fit(opts: dict) -> int:
    cfg = run_config(opts, default_workers=False)
    model = build_model(cfg)
    res = fit_optimum(model, cfg)
    report = {
        "config": {k: v for k, v in cfg.echo().items() if k not in ("M", "K", "Mprime", "tol_nu", "qp_tol")},
        "beta_star": res.beta,
        "nu_star": res.loss,
        "kkt_residual": res.kkt_residual,
        "iterations": res.iterations,
        "nonzeros": int(np.count_nonzero(res.beta)),
    }
    _emit_json(dumps_record(report), opts.get("out"))
    return 0


COMMANDS = {"run": cmd_run, "curve": cmd_curve, "project": cmd_project, "gen": cmd_gen, "fit": cmd_fit}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        opts = merged_options(args)
        return COMMANDS[args.command](opts)
    except HullscopeError as exc:
        print(f"hullscope: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"hullscope: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
