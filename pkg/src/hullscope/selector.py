"""Farthest-point greedy selection of hull vertices from a sampled cloud.

Starting from a given point, each step adds the cloud point farthest from
the convex hull of the points selected so far. Adding a vertex can only
shrink the distance of every other point to the hull, so a distance
computed against an older hull is an upper bound on the current one. The
lazy selector keeps those bounds in a max-heap and only recomputes the
current top; an entry whose key was computed against the current hull is
exact and, once on top, is the farthest point.

Ties (equal distances) go to the lowest cloud index. Points whose distance
drops to ``qp_tol`` or below count as covered (distance 0).
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, DataError
from .geometry import Hull, dedup_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelectorConfig:
    k: int
    qp_tol: float = 1e-9
    method: str = "active-set"
    trace: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.qp_tol > 0:
            raise ConfigError(f"qp_tol must be positive, got {self.qp_tol}")


@dataclass
class HullApproximation:
    """Selected cloud indices in selection order, with per-step diagnostics.

    ``step_distance[i]`` is the distance of the point added at step i+1 to
    the hull before it was added, i.e. the sample-approximated Hausdorff
    distance of the first i+1 points. ``final_distance`` is the same quantity
    for the complete selection. ``eval_count[i]`` counts distance
    evaluations (QP solves) spent on step i+1; the first step's count is the
    initialisation against the starting point.
    """

    selected: List[int]
    step_distance: List[float]
    eval_count: List[int]
    final_distance: float = 0.0
    final_evals: int = 0
    status: str = "ok"
    trace: List[tuple] = field(default_factory=list)
    heap_final_keys: Optional[dict] = None

    @property
    def total_evals(self) -> int:
        return int(sum(self.eval_count))


def as_matrix(cloud) -> np.ndarray:
    if hasattr(cloud, "betas"):
        return cloud.betas
    if len(cloud) and hasattr(cloud[0], "beta"):
        return np.vstack([pt.beta for pt in cloud])
    return np.atleast_2d(np.asarray(cloud, dtype=np.float64))


def pick_first(cloud, beta_star) -> int:
    """Index of the cloud point farthest (Euclidean) from ``beta_star``; lowest index on ties."""
    if len(cloud) == 0:
        raise DataError("cannot pick a first point from an empty cloud")
    B = as_matrix(cloud)
    dist = np.linalg.norm(B - np.asarray(beta_star, dtype=np.float64), axis=1)
    return int(np.argmax(dist))


def _prepare(cloud, first, cfg):
    B = as_matrix(cloud)
    if B.shape[0] == 0 or B.size == 0:
        raise DataError("empty cloud")
    if not 0 <= first < B.shape[0]:
        raise DataError(f"first index {first} outside cloud of size {B.shape[0]}")
    _, owner = dedup_rows(B)
    return B, owner


def _next_uncovered(order, owner, taken_groups, selected_set):
    for i in order:
        if i not in selected_set and owner[i] not in taken_groups:
            return i
    return None


def greedy_select(cloud, first: int, cfg: SelectorConfig) -> HullApproximation:
    """Lazy farthest-point selection of ``cfg.k`` points starting at ``first``."""
    B, owner = _prepare(cloud, first, cfg)
    M = B.shape[0]
    hull = Hull(B[[first]], method=cfg.method, tol=cfg.qp_tol)
    selected, steps, counts, trace = [first], [], [], []
    selected_set, taken = {first}, {owner[first]}
    retired: List[int] = []

    # Keys against the single starting point are exact: stamp them as fresh for |Q| = 1.
    heap = []
    init = 0
    for i in range(M):
        if i == first:
            continue
        d = float(np.linalg.norm(B[i] - B[first]))
        init += 1
        if d <= cfg.qp_tol:
            retired.append(i)
        else:
            heap.append((-d, i, 1))
    heapq.heapify(heap)

    def pop_farthest():
        evals = 0
        while heap:
            negkey, i, stamp = heapq.heappop(heap)
            if stamp == len(selected):
                return i, -negkey, evals
            d = hull.distance(B[i])
            evals += 1
            if cfg.trace:
                trace.append((len(selected), i, -negkey, d))
            if d <= cfg.qp_tol:
                retired.append(i)
                continue
            heapq.heappush(heap, (-d, i, len(selected)))
        return None, 0.0, evals

    status = "ok"
    while len(selected) < cfg.k:
        i, d, evals = pop_farthest()
        if len(selected) == 1:
            evals += init
        if i is None:
            i = _next_uncovered(sorted(retired), owner, taken, selected_set)
            d = 0.0
            if i is None:
                status = "exhausted"
                log.warning("cloud has only %d distinct points; stopped before k=%d", len(selected), cfg.k)
                break
            retired.remove(i)
        selected.append(i)
        selected_set.add(i)
        taken.add(owner[i])
        steps.append(d)
        counts.append(evals)
        hull = Hull(B[selected], method=cfg.method, tol=cfg.qp_tol)

    final_d, final_evals = 0.0, 0
    if len(selected) == 1:
        final_evals = init
        live = [-k for k, _, _ in heap]
        final_d = max(live) if live else 0.0
    else:
        i, d, final_evals = pop_farthest()
        if i is not None:
            final_d = d
            heapq.heappush(heap, (-d, i, len(selected)))
    return HullApproximation(
        selected=selected,
        step_distance=steps,
        eval_count=counts,
        final_distance=final_d,
        final_evals=final_evals,
        status=status,
        trace=trace,
        heap_final_keys={i: -k for k, i, _ in heap},
    )


def naive_greedy(cloud, first: int, cfg: SelectorConfig) -> HullApproximation:
    """Reference farthest-point selection recomputing every distance each step."""
    B, owner = _prepare(cloud, first, cfg)
    M = B.shape[0]
    selected, steps, counts = [first], [], []
    selected_set, taken = {first}, {owner[first]}

    def all_distances():
        hull = Hull(B[selected], method=cfg.method, tol=cfg.qp_tol)
        rest = [i for i in range(M) if i not in selected_set]
        out = {}
        for i in rest:
            if len(selected) == 1:
                d = float(np.linalg.norm(B[i] - B[first]))
            else:
                d = hull.distance(B[i])
            out[i] = 0.0 if d <= cfg.qp_tol else d
        return out

    status = "ok"
    while len(selected) < cfg.k:
        dist = all_distances()
        if not dist:
            status = "exhausted"
            break
        best = max(dist.items(), key=lambda kv: (kv[1], -kv[0]))
        i, d = best
        if d == 0.0:
            i = _next_uncovered(sorted(dist), owner, taken, selected_set)
            if i is None:
                status = "exhausted"
                log.warning("cloud has only %d distinct points; stopped before k=%d", len(selected), cfg.k)
                break
        selected.append(i)
        selected_set.add(i)
        taken.add(owner[i])
        steps.append(d)
        counts.append(len(dist))
    dist = all_distances()
    final = max(dist.values()) if dist else 0.0
    return HullApproximation(
        selected=selected, step_distance=steps, eval_count=counts, final_distance=final, final_evals=len(dist), status=status
    )
