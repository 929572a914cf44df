"""Random extreme points of the near-optimal level set B(nu) = {beta : L(beta) <= nu}.

For a direction ``d`` the extreme point maximises ``d^T beta`` over B(nu).
It is found through the Lagrange dual: for a multiplier ``tau > 0`` the
inner problem ``max_beta d^T beta - tau (L(beta) - nu)`` is a tilted fit
with tilt ``d / tau``, and ``tau`` is tuned (exponential bracketing, then
bisection) until the constraint is active, ``L(beta(tau)) = nu``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .errors import BracketFailure, ConfigError, NonMonotone, SamplerError, SolverError
from .model import LossModel, SolverConfig, eval_loss, fit

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LevelSetSpec:
    model: LossModel
    nu: float
    nu_star: float
    beta_star: Optional[np.ndarray] = None

    def __post_init__(self):
        if not math.isfinite(self.nu):
            raise ConfigError(f"level nu must be finite, got {self.nu}")
        if self.nu < self.nu_star - 1e-12:
            raise ConfigError(f"level nu={self.nu!r} is below the optimum nu*={self.nu_star!r}; B(nu) is empty")

    @classmethod
    def from_fit(cls, model, fit_result, *, nu=None, factor=None, offset=None):
        """Level set at an absolute ``nu``, at ``factor * nu*`` or at ``nu* + offset``."""
        given = [v is not None for v in (nu, factor, offset)]
        if sum(given) != 1:
            raise ConfigError("exactly one of nu, factor, offset must be given")
        nu_star = fit_result.loss
        if factor is not None:
            if factor < 1:
                raise ConfigError(f"nu factor must be >= 1, got {factor}")
            nu = factor * nu_star
        elif offset is not None:
            if offset < 0:
                raise ConfigError(f"nu offset must be >= 0, got {offset}")
            nu = nu_star + offset
        return cls(model=model, nu=float(nu), nu_star=nu_star, beta_star=fit_result.beta.copy())


@dataclass(frozen=True)
class SamplerConfig:
    m: int = 50
    seed: int = 0
    tol_nu: float = 1e-6
    tau_init: float = 1.0
    max_doublings: int = 60
    max_bisections: int = 100
    solver: SolverConfig = field(default_factory=SolverConfig)
    # Bisection aims at tol_nu * refine; anything within tol_nu is accepted
    # once the bracket cannot shrink further.
    refine: float = 1e-3
    label: int = rngmod.SAMPLE
    workers: int = 1

    def __post_init__(self):
        if self.m < 0:
            raise ConfigError(f"number of directions must be >= 0, got {self.m}")
        if not self.tol_nu > 0:
            raise ConfigError(f"tol_nu must be positive, got {self.tol_nu}")
        if not self.tau_init > 0:
            raise ConfigError(f"tau_init must be positive, got {self.tau_init}")
        if not 0 < self.refine <= 1:
            raise ConfigError(f"refine must lie in (0, 1], got {self.refine}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class ExtremePoint:
    beta: np.ndarray
    direction: np.ndarray
    tau: float
    loss: float
    index: int = -1
    evaluations: int = 0


@dataclass
class SampleCloud:
    """Extreme points ordered by direction index, plus the indices that were skipped."""

    points: List[ExtremePoint]
    requested: int
    skipped: List[int] = field(default_factory=list)
    retried: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def betas(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, 0))
        return np.vstack([pt.beta for pt in self.points])

    @property
    def directions(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, 0))
        return np.vstack([pt.direction for pt in self.points])


def _radius_bound(spec: LevelSetSpec) -> float:
    # Every beta in B(nu) has lam * ||beta||_1 <= nu because the smooth part is >= 0.
    return spec.nu / spec.model.lam


def dual_inner(model: LossModel, spec: LevelSetSpec, d, tau: float, cfg: Optional[SolverConfig] = None, beta0=None):
    """Maximiser of ``d^T beta - tau (L(beta) - nu)`` and its loss.

    Returns ``(beta, loss, result)``. ``loss`` is ``inf`` when the solve was
    cut off because the maximiser provably lies outside B(nu).
    """
    if not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    cfg = cfg or SolverConfig()
    d = np.asarray(d, dtype=np.float64)
    tilt = d / tau
    # min over B(nu) of L - t'beta is at least nu* - ||t||_inf * nu / lam; an
    # iterate below that shows the tilted minimiser is outside B(nu).
    floor = spec.nu_star - float(np.max(np.abs(tilt))) * _radius_bound(spec)
    floor -= 1e-9 * (1.0 + abs(floor))
    # Minimisers inside B(nu) have Euclidean norm at most nu / lam as well.
    res = fit(model, cfg, tilt, beta0=beta0, objective_floor=floor, escape_radius=_radius_bound(spec))
    if res.status in ("floor", "escaped"):
        return res.beta, math.inf, res
    if not res.converged:
        raise SolverError(
            f"inner solve did not converge at tau={tau:.6g} (status {res.status}, KKT residual {res.kkt_residual:.3g})"
        )
    return res.beta, res.loss, res


def _within(loss: float, nu: float, tol: float) -> bool:
    return abs(loss - nu) <= tol * max(abs(nu), 1e-300)


def solve_direction(model: LossModel, spec: LevelSetSpec, d, cfg: SamplerConfig) -> ExtremePoint:
    """Extreme point of B(nu) in direction ``d`` via multiplier search."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape[0] != model.p:
        raise ConfigError(f"direction has length {d.shape[0]}, model has p={model.p}")
    if not np.any(d != 0):
        raise ConfigError("direction must be nonzero")
    nu, tol = spec.nu, cfg.tol_nu * cfg.refine
    slack = 10.0 * cfg.tol_nu * max(abs(nu), 1e-300)
    evals = 0
    warm = None if spec.beta_star is None else np.asarray(spec.beta_star, dtype=np.float64)

    def solve(tau, start):
        nonlocal evals
        evals += 1
        beta, loss, _ = dual_inner(model, spec, d, tau, cfg.solver, beta0=start)
        return beta, loss

    def accept(tau, beta, loss):
        beta = beta.copy()
        return ExtremePoint(beta=beta, direction=d.copy(), tau=tau, loss=eval_loss(model, beta), evaluations=evals)

    tau = cfg.tau_init
    beta, loss = solve(tau, warm)
    if _within(loss, nu, tol):
        return accept(tau, beta, loss)

    # Exponential phase: the loss of the tilted maximiser decreases as tau grows.
    if loss > nu:
        lo, lo_beta, lo_loss = tau, beta, loss
        for _ in range(cfg.max_doublings):
            tau *= 2.0
            start = lo_beta if math.isfinite(lo_loss) else warm
            beta, loss = solve(tau, start)
            if loss > lo_loss + slack:
                raise NonMonotone(f"loss rose from {lo_loss:.17g} to {loss:.17g} when tau doubled to {tau:.6g}")
            if _within(loss, nu, tol):
                return accept(tau, beta, loss)
            if loss < nu:
                hi, hi_beta, hi_loss = tau, beta, loss
                break
            lo, lo_beta, lo_loss = tau, beta, loss
        else:
            raise BracketFailure(
                f"loss still above nu={nu:.17g} after {cfg.max_doublings} doublings of tau "
                f"(last loss {loss:.17g}); nu may be at or below the attainable optimum"
            )
    else:
        hi, hi_beta, hi_loss = tau, beta, loss
        for _ in range(cfg.max_doublings):
            tau *= 0.5
            beta, loss = solve(tau, hi_beta)
            if loss < hi_loss - slack:
                raise NonMonotone(f"loss fell from {hi_loss:.17g} to {loss:.17g} when tau halved to {tau:.6g}")
            if _within(loss, nu, tol):
                return accept(tau, beta, loss)
            if loss > nu:
                lo, lo_beta, lo_loss = tau, beta, loss
                break
            hi, hi_beta, hi_loss = tau, beta, loss
        else:
            raise BracketFailure(
                f"loss still below nu={nu:.17g} after {cfg.max_doublings} halvings of tau (last loss {loss:.17g})"
            )

    # Bisection on [lo, hi] with L(lo) > nu > L(hi).
    best = None
    for _ in range(cfg.max_bisections):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        start = lo_beta if math.isfinite(lo_loss) else hi_beta
        beta, loss = solve(mid, start)
        if loss > lo_loss + slack or loss < hi_loss - slack:
            raise NonMonotone(
                f"loss {loss:.17g} at tau={mid:.17g} outside bracket [{hi_loss:.17g}, {lo_loss:.17g}]"
            )
        if _within(loss, nu, tol):
            return accept(mid, beta, loss)
        if _within(loss, nu, cfg.tol_nu) and (best is None or abs(loss - nu) < abs(best[2] - nu)):
            best = (mid, beta.copy(), loss)
        if loss > nu:
            lo, lo_beta, lo_loss = mid, beta, loss
        else:
            hi, hi_beta, hi_loss = mid, beta, loss
    if best is not None:
        return accept(*best)
    raise BracketFailure(
        f"bisection stopped at tau in [{lo:.17g}, {hi:.17g}] with losses [{hi_loss:.17g}, {lo_loss:.17g}] "
        f"without reaching relative tolerance {tol:g}"
    )


def _solve_index(model, spec, cfg, index):
    stream = rngmod.stream(cfg.seed, cfg.label, index)
    failures = []
    for _attempt in range(2):
        d = rngmod.draw_direction(stream, model.p)
        try:
            pt = solve_direction(model, spec, d, cfg)
        except (BracketFailure, NonMonotone) as exc:
            failures.append(exc)
            continue
        pt.index = index
        return pt, failures
    return None, failures


def sample_cloud(model: LossModel, spec: LevelSetSpec, cfg: SamplerConfig, max_fail_fraction: float = 0.1) -> SampleCloud:
    """Solve ``cfg.m`` random directions; direction ``i`` draws from stream ``(seed, label, i)``.

    A direction whose search fails is retried once with a fresh draw from its
    own stream, then skipped. More than ``max_fail_fraction`` skipped
    directions raises ``SamplerError``.
    """
    indices = range(cfg.m)
    if cfg.workers > 1 and cfg.m > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda i: _solve_index(model, spec, cfg, i), indices))
    else:
        results = [_solve_index(model, spec, cfg, i) for i in indices]

    points, skipped, retried = [], [], []
    last_error = None
    for i, (pt, failures) in enumerate(results):
        if failures:
            retried.append(i)
            last_error = failures[-1]
        if pt is None:
            skipped.append(i)
            log.warning("direction %d skipped after retry: %s", i, failures[-1])
        else:
            points.append(pt)
    if cfg.m and len(skipped) > max_fail_fraction * cfg.m:
        raise SamplerError(
            f"{len(skipped)} of {cfg.m} directions failed (limit {max_fail_fraction:.0%}); last error: {last_error}"
        )
    if points and spec.nu - spec.nu_star <= cfg.tol_nu * abs(spec.nu):
        log.warning("nu equals nu* within tolerance; the sampled cloud collapses onto the optimum")
    return SampleCloud(points=points, requested=cfg.m, skipped=skipped, retried=retried)


def support_violations(cloud: Sequence[ExtremePoint], rel_tol: float = 1e-6) -> List[int]:
    """Indices of points that are not maximisers of their own direction over the cloud."""
    if not len(cloud):
        return []
    B = np.vstack([pt.beta for pt in cloud])
    D = np.vstack([pt.direction for pt in cloud])
    scores = D @ B.T
    own = np.diag(scores)
    best = scores.max(axis=1)
    scale = rel_tol * np.linalg.norm(D, axis=1) * np.max(np.linalg.norm(B, axis=1))
    return [int(i) for i in np.flatnonzero(own < best - scale)]
