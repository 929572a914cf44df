"""End-to-end runs: fit, sample, select, evaluate against a fresh sample."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .data import DEMO_DEFAULTS, RunRecord, SyntheticSpec, gen_synthetic, read_csv, read_libsvm
from .errors import ConfigError, SolverError
from .geometry import Hull, hausdorff_estimate, lazy_max_distance
from .model import Dataset, LossModel, SolverConfig, eval_loss, fit
from .sampler import LevelSetSpec, SampleCloud, SamplerConfig, sample_cloud
from .selector import SelectorConfig, greedy_select, naive_greedy, pick_first

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    demo: Optional[str] = None
    synthetic: Optional[str] = None
    data: Optional[str] = None
    format: str = "libsvm"
    label_column: int = -1
    p: Optional[int] = None
    epsilon: float = 1.0 / 40.0
    noise_sd: float = 0.1
    loss: str = "squared"
    scale: str = "mean"
    lam: Optional[float] = None
    nu: Optional[float] = None
    nu_factor: Optional[float] = None
    nu_offset: Optional[float] = None
    M: int = 50
    K: int = 4
    Mprime: int = 1000
    seed: int = 0
    tol_nu: float = 1e-6
    qp_tol: float = 1e-9
    solver_tol: float = 1e-8
    max_iter: int = 1_000_000
    workers: int = 1

    def __post_init__(self):
        sources = [s for s in (self.demo, self.synthetic, self.data) if s is not None]
        if len(sources) != 1:
            raise ConfigError("exactly one data source is required: --demo, --synthetic or --data")
        if self.demo is not None and self.demo not in DEMO_DEFAULTS:
            raise ConfigError(f"unknown demo {self.demo!r}; expected one of {sorted(DEMO_DEFAULTS)}")
        if self.demo is not None:
            d = DEMO_DEFAULTS[self.demo]
            self.loss, self.scale = d["kind"], d["scale"]
            if self.lam is None:
                self.lam = d["lam"]
            if self.nu is None and self.nu_factor is None and self.nu_offset is None:
                self.nu_offset = self.epsilon
        if self.synthetic == "correlated" and self.lam is None:
            self.lam = 0.1
        if self.lam is None:
            raise ConfigError("--lambda is required for this data source")
        rules = [v is not None for v in (self.nu, self.nu_factor, self.nu_offset)]
        if sum(rules) > 1:
            raise ConfigError("give at most one of --nu, --nu-factor, --nu-offset")
        if not any(rules):
            self.nu_factor = 1.01
        if self.nu_factor is not None and self.nu_factor < 1:
            raise ConfigError(f"--nu-factor must be >= 1, got {self.nu_factor}")
        for name in ("M", "Mprime"):
            if getattr(self, name) < 0:
                raise ConfigError(f"--{name} must be >= 0")
        if self.K < 1:
            raise ConfigError("--K must be >= 1")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")

    def echo(self) -> dict:
        """Everything that determines the result; the worker count does not."""
        out = asdict(self)
        out.pop("workers")
        return out

    def solver(self) -> SolverConfig:
        return SolverConfig(tol=self.solver_tol, max_iter=self.max_iter)

    def sampler(self, m: int, label: int) -> SamplerConfig:
        return SamplerConfig(
            m=m, seed=self.seed, tol_nu=self.tol_nu, solver=self.solver(), label=label, workers=self.workers
        )


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.demo is not None:
        return gen_synthetic(SyntheticSpec(cfg.demo, epsilon=cfg.epsilon))[0]
    if cfg.synthetic is not None:
        spec = SyntheticSpec(cfg.synthetic, p=cfg.p, epsilon=cfg.epsilon, noise_sd=cfg.noise_sd, seed=cfg.seed)
        return gen_synthetic(spec)[0]
    if cfg.format == "libsvm":
        return read_libsvm(cfg.data)
    if cfg.format == "csv":
        return read_csv(cfg.data, cfg.label_column)
    raise ConfigError(f"unknown data format {cfg.format!r}")


def build_model(cfg: RunConfig, dataset: Optional[Dataset] = None) -> LossModel:
    return LossModel(kind=cfg.loss, lam=cfg.lam, dataset=dataset or load_dataset(cfg), scale=cfg.scale)


def fit_optimum(model: LossModel, cfg: RunConfig):
    res = fit(model, cfg.solver())
    if not res.converged:
        raise SolverError(f"global fit did not converge (status {res.status}, KKT residual {res.kkt_residual:.3g})")
    return res


def level_set(model: LossModel, res, cfg: RunConfig) -> LevelSetSpec:
    return LevelSetSpec.from_fit(model, res, nu=cfg.nu, factor=cfg.nu_factor, offset=cfg.nu_offset)


def boundary_deviation(model: LossModel, spec: LevelSetSpec, betas) -> List[float]:
    """Relative gap |L(beta) - nu| / nu, recomputed from scratch."""
    return [abs(eval_loss(model, b) - spec.nu) / abs(spec.nu) for b in np.atleast_2d(betas)]


def _cloud_summary(cloud: SampleCloud, model, spec) -> dict:
    dev = boundary_deviation(model, spec, cloud.betas) if len(cloud) else []
    return {
        "requested": cloud.requested,
        "size": len(cloud),
        "skipped": cloud.skipped,
        "retried": cloud.retried,
        "max_boundary_deviation": max(dev) if dev else 0.0,
        "mean_multiplier_evaluations": float(np.mean([p.evaluations for p in cloud])) if len(cloud) else 0.0,
    }


@dataclass
class RunResult:
    record: RunRecord
    cloud: SampleCloud
    eval_cloud: SampleCloud
    selected: np.ndarray


def run(cfg: RunConfig) -> RunResult:
    t0 = time.perf_counter()
    timings = {}
    model = build_model(cfg)
    opt = fit_optimum(model, cfg)
    spec = level_set(model, opt, cfg)
    timings["fit"] = time.perf_counter() - t0

    t = time.perf_counter()
    cloud = sample_cloud(model, spec, cfg.sampler(cfg.M, rngmod.SAMPLE))
    timings["sample"] = time.perf_counter() - t
    if not len(cloud):
        raise ConfigError("sample cloud is empty; increase --M")

    t = time.perf_counter()
    first = pick_first(cloud, opt.beta)
    k = min(cfg.K, len(cloud))
    approx = greedy_select(cloud, first, SelectorConfig(k=k, qp_tol=cfg.qp_tol))
    selected = cloud.betas[approx.selected]
    timings["select"] = time.perf_counter() - t

    t = time.perf_counter()
    eval_cloud = sample_cloud(model, spec, cfg.sampler(cfg.Mprime, rngmod.EVAL))
    if len(eval_cloud):
        est = hausdorff_estimate(selected, eval_cloud.betas, tol=cfg.qp_tol, workers=cfg.workers)
        evaluation = {
            "Mprime": cfg.Mprime,
            "size": len(eval_cloud),
            "skipped": eval_cloud.skipped,
            "forward": est.forward,
            "backward": est.backward,
            "symmetric": est.symmetric,
            "forward_witness": est.forward_witness,
            "backward_witness": est.backward_witness,
        }
    else:
        evaluation = {"Mprime": cfg.Mprime, "size": 0, "skipped": eval_cloud.skipped}
    timings["evaluate"] = time.perf_counter() - t
    timings["total"] = time.perf_counter() - t0
    timings["workers"] = cfg.workers

    dev = boundary_deviation(model, spec, selected)
    summary = _cloud_summary(cloud, model, spec)
    summary.update({"nu": spec.nu, "nu_star": spec.nu_star, "beta_star": opt.beta, "kkt_residual": opt.kkt_residual})
    record = RunRecord(
        config=cfg.echo(),
        cloud=summary,
        selection={
            "first": first,
            "indices": approx.selected,
            "points": selected,
            "losses": [eval_loss(model, b) for b in selected],
            "boundary_deviation": dev,
            "within_tolerance": bool(max(dev) <= cfg.tol_nu),
            "step_distance": approx.step_distance,
            "final_distance": approx.final_distance,
            "eval_count": approx.eval_count,
            "status": approx.status,
        },
        evaluation=evaluation,
        timings=timings,
    )
    return RunResult(record=record, cloud=cloud, eval_cloud=eval_cloud, selected=selected)


def hausdorff_curve(qstar: np.ndarray, selected: np.ndarray, ks: Sequence[int], tol: float = 1e-9):
    """Forward, backward and symmetric distances between conv(selected[:k]) and conv(qstar) for each k.

    Forward distances reuse bounds across k (they only shrink as the hull
    grows); backward distances are prefix maxima of per-vertex distances.
    """
    ks = sorted(set(int(k) for k in ks if 1 <= k <= len(selected)))
    bounds = np.linalg.norm(qstar - selected[0], axis=1)
    star_hull = Hull(qstar, tol=tol)
    per_vertex = [star_hull.distance(v) for v in selected[: max(ks)]] if ks else []
    rows = []
    evals = 0
    for k in ks:
        fwd, _, e = lazy_max_distance(qstar, Hull(selected[:k], tol=tol), bounds)
        evals += e
        bwd = max(per_vertex[:k])
        rows.append({"K": k, "forward": fwd, "backward": bwd, "symmetric": max(fwd, bwd)})
    return rows, evals


def curve(cfg: RunConfig, k_grid: Sequence[int], m_grid: Sequence[int], naive: bool = True) -> dict:
    """Distance-vs-K curves for several cloud sizes against one evaluation sample.

    Direction ``i`` uses the same random stream for every M, so the cloud of
    size M is the prefix of the largest cloud; it is sampled once.
    """
    if not k_grid or not m_grid:
        raise ConfigError("K and M grids must be nonempty")
    t0 = time.perf_counter()
    model = build_model(cfg)
    opt = fit_optimum(model, cfg)
    spec = level_set(model, opt, cfg)
    kmax = max(k_grid)
    big = sample_cloud(model, spec, cfg.sampler(max(m_grid), rngmod.SAMPLE))
    t_sample = time.perf_counter() - t0
    eval_cloud = sample_cloud(model, spec, cfg.sampler(cfg.Mprime, rngmod.EVAL))
    if not len(eval_cloud):
        raise ConfigError("evaluation cloud is empty; increase --Mprime")
    qstar = eval_cloud.betas
    t_eval_sample = time.perf_counter() - t0 - t_sample

    curves = []
    for m in sorted(set(m_grid)):
        pts = [pt for pt in big.points if pt.index < m]
        sub = SampleCloud(points=pts, requested=m, skipped=[i for i in big.skipped if i < m])
        first = pick_first(sub, opt.beta)
        scfg = SelectorConfig(k=min(kmax, len(sub)), qp_tol=cfg.qp_tol)
        t = time.perf_counter()
        lazy = greedy_select(sub, first, scfg)
        t_lazy = time.perf_counter() - t
        entry = {
            "M": m,
            "cloud_size": len(sub),
            "first": first,
            "selected": lazy.selected,
            "step_distance": lazy.step_distance,
            "lazy_eval_count": lazy.eval_count,
            "lazy_total_evals": lazy.total_evals,
            "lazy_seconds": t_lazy,
        }
        if naive:
            t = time.perf_counter()
            ref = naive_greedy(sub, first, scfg)
            entry["naive_eval_count"] = ref.eval_count
            entry["naive_total_evals"] = ref.total_evals
            entry["naive_seconds"] = time.perf_counter() - t
            entry["naive_matches_lazy"] = ref.selected == lazy.selected
        rows, evals = hausdorff_curve(qstar, sub.betas[lazy.selected], k_grid, cfg.qp_tol)
        entry["hausdorff"] = rows
        entry["evaluation_distance_evals"] = evals
        curves.append(entry)
    return {
        "config": cfg.echo(),
        "level": {"nu": spec.nu, "nu_star": spec.nu_star},
        "K_grid": sorted(set(k_grid)),
        "M_grid": sorted(set(m_grid)),
        "evaluation": {"Mprime": cfg.Mprime, "size": len(eval_cloud), "skipped": eval_cloud.skipped},
        "curves": curves,
        "timings": {
            "sample": t_sample,
            "sample_evaluation": t_eval_sample,
            "total": time.perf_counter() - t0,
            "workers": cfg.workers,
        },
    }
