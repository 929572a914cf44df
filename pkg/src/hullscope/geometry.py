"""Point-to-hull projection, hull-to-hull Hausdorff estimates and 2-D PCA.

The distance from ``beta`` to ``conv(V)`` is the simplex-constrained least
squares problem

    min_alpha || beta - sum_j alpha_j v_j ||^2   s.t.  alpha >= 0, sum(alpha) = 1.

Two solvers are provided. The default is Wolfe's minimum-norm-point
algorithm (an active-set method) applied to the shifted vertices
``u_j = v_j - beta``; it terminates on the Frank-Wolfe gap, which bounds the
error of the returned distance by ``tol``. The alternative is accelerated
projected gradient on ``alpha`` with exact Euclidean projection onto the
probability simplex.
"""
from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DataError

DEDUP_TOL = 1e-12
_WEIGHT_EPS = 1e-12


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto {x >= 0, sum(x) = 1} (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def dedup_rows(V: np.ndarray, tol: float = DEDUP_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Drop rows equal (max-abs within ``tol``) to their neighbour in a fixed 1-D sort order.

    Rows are ordered by their projection on a fixed positive vector, so
    duplicates become neighbours. Returns ``(kept_indices, owner)`` where
    ``owner[i]`` is the lowest index of the group row ``i`` belongs to.
    Near-duplicates that do not end up adjacent survive; the solvers
    tolerate them.
    """
    n = V.shape[0]
    owner = np.arange(n)
    if n <= 1:
        return owner.copy(), owner
    key = V @ np.linspace(1.0, 2.0, V.shape[1])
    order = np.argsort(key, kind="stable")
    step = np.max(np.abs(np.diff(V[order], axis=0)), axis=1) > tol
    group = np.empty(n, dtype=np.int64)
    group[order] = np.concatenate(([0], np.cumsum(step)))
    first = np.full(int(group.max()) + 1, n, dtype=np.int64)
    np.minimum.at(first, group, np.arange(n))
    owner = first[group]
    return np.unique(first), owner


@dataclass
class HullProjection:
    distance: float
    alpha: np.ndarray
    witness: np.ndarray
    iterations: int = 0
    converged: bool = True


def _affine_min_norm(US: np.ndarray) -> np.ndarray:
    """Weights (summing to one) of the min-norm point of the affine hull of the rows of US."""
    s = US.shape[0]
    if s == 1:
        return np.ones(1)
    D = (US[1:] - US[0]).T
    c, *_ = np.linalg.lstsq(D, -US[0], rcond=None)
    mu = np.empty(s)
    mu[1:] = c
    mu[0] = 1.0 - c.sum()
    return mu


def _min_norm_point(U: np.ndarray, tol: float, max_iter: int):
    """Wolfe's algorithm on the rows of U. Returns (weights over rows, iterations, converged)."""
    N = U.shape[0]
    norms = np.einsum("ij,ij->i", U, U)
    scale = max(float(norms.max()), 1e-300)
    j0 = int(np.argmin(norms))
    S = [j0]
    lam = np.ones(1)
    x = U[j0].copy()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        xx = float(x @ x)
        if xx <= tol * tol:
            converged = True
            break
        scores = U @ x
        j = int(np.argmin(scores))
        gap = xx - float(scores[j])
        if gap <= tol * math.sqrt(xx) or gap <= 1e-15 * scale or j in S:
            converged = True
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_min_norm(U[S])
            if np.all(mu > _WEIGHT_EPS):
                lam = mu
                break
            neg = mu <= _WEIGHT_EPS
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - mu), np.inf)
            theta = float(min(1.0, np.min(ratios)))
            lam = (1.0 - theta) * lam + theta * mu
            keep = lam > _WEIGHT_EPS
            if keep.all():
                keep[int(np.argmin(lam))] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ U[S]
    alpha = np.zeros(N)
    alpha[S] = lam
    return alpha, it, converged


def _projected_gradient(U: np.ndarray, tol: float, max_iter: int):
    """FISTA with adaptive restart on f(alpha) = 1/2 ||U^T alpha||^2 over the simplex."""
    N = U.shape[0]
    lip = max(float(np.linalg.norm(U, 2)) ** 2, 1e-300)
    alpha = np.full(N, 1.0 / N)
    y = alpha.copy()
    t = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = U @ (U.T @ y)
        nxt = project_simplex(y - grad / lip)
        g_alpha = U @ (U.T @ alpha)
        pg = lip * np.linalg.norm(alpha - project_simplex(alpha - g_alpha / lip))
        if pg <= tol:
            converged = True
            break
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if float((y - nxt) @ (nxt - alpha)) > 0:
            t_next, y = 1.0, nxt.copy()
        else:
            y = nxt + ((t - 1.0) / t_next) * (nxt - alpha)
        alpha, t = nxt, t_next
    return alpha, it, converged


class Hull:
    """Convex hull of a vertex list, with duplicates collapsed once up front."""

    def __init__(self, vertices, method: str = "active-set", tol: float = 1e-9, max_iter: int = 10_000):
        V = np.atleast_2d(np.asarray(vertices, dtype=np.float64))
        if V.shape[0] == 0 or V.size == 0:
            raise DataError("hull needs at least one vertex")
        if method not in ("active-set", "projected-gradient"):
            raise ConfigError(f"unknown projection method {method!r}")
        self.method, self.tol, self.max_iter = method, tol, max_iter
        self.all_vertices = V
        self.kept, self.owner = dedup_rows(V)
        self.V = V[self.kept]

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    def project(self, beta) -> HullProjection:
        beta = np.asarray(beta, dtype=np.float64).ravel()
        if beta.shape[0] != self.dim:
            raise DataError(f"point has dimension {beta.shape[0]}, hull vertices have {self.dim}")
        U = self.V - beta
        if self.V.shape[0] == 1:
            w, it, ok = np.ones(1), 0, True
        elif self.method == "active-set":
            w, it, ok = _min_norm_point(U, self.tol, self.max_iter)
        else:
            w, it, ok = _projected_gradient(U, self.tol, self.max_iter)
        w = np.maximum(w, 0.0)
        w /= w.sum()
        alpha = np.zeros(self.all_vertices.shape[0])
        alpha[self.kept] = w
        witness = w @ self.V
        return HullProjection(
            distance=float(np.linalg.norm(beta - witness)), alpha=alpha, witness=witness, iterations=it, converged=ok
        )

    def distance(self, beta) -> float:
        return self.project(beta).distance


def dist_to_hull(beta, vertices, tol: float = 1e-9, method: str = "active-set", max_iter: int = 10_000) -> HullProjection:
    """Projection of ``beta`` onto ``conv(vertices)``."""
    return Hull(vertices, method=method, tol=tol, max_iter=max_iter).project(beta)


def directed_hull_distance(from_vertices, to_vertices, tol: float = 1e-9, workers: int = 1, prune: bool = True):
    """max over ``from_vertices`` of the distance to ``conv(to_vertices)``; returns ``(distance, index)``.

    The nearest ``to`` vertex gives an upper bound for every candidate.
    Candidates are evaluated in decreasing bound order and the scan stops
    once the best exact distance strictly exceeds every remaining bound.
    Equal distances resolve to the lowest index.
    """
    A = np.atleast_2d(np.asarray(from_vertices, dtype=np.float64))
    hull = to_vertices if isinstance(to_vertices, Hull) else Hull(to_vertices, tol=tol)
    if A.shape[0] == 0:
        raise DataError("from_vertices is empty")
    if A.shape[1] != hull.dim:
        raise DataError(f"dimension mismatch: {A.shape[1]} vs {hull.dim}")
    if not prune:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                dists = list(pool.map(hull.distance, A))
        else:
            dists = [hull.distance(a) for a in A]
        i = int(np.argmax(dists))
        return float(dists[i]), i
    ub = _nearest_vertex_distance(A, hull.V)
    order = sorted(range(A.shape[0]), key=lambda i: (-ub[i], i))
    best, best_i = -1.0, -1
    for i in order:
        if ub[i] < best:
            break
        d = hull.distance(A[i])
        if d > best or (d == best and i < best_i):
            best, best_i = d, i
    return float(best), int(best_i)


def _nearest_vertex_distance(A: np.ndarray, V: np.ndarray, block: int = 2048) -> np.ndarray:
    out = np.empty(A.shape[0])
    vv = np.einsum("ij,ij->i", V, V)
    for s in range(0, A.shape[0], block):
        a = A[s : s + block]
        d2 = -2.0 * a @ V.T + vv[None, :]
        near = np.argmin(d2, axis=1)
        # Exact distance to the chosen vertex: a valid bound even if rounding picked the wrong one.
        out[s : s + block] = np.linalg.norm(a - V[near], axis=1)
    return out


@dataclass
class HausdorffEstimate:
    forward: float
    backward: float
    symmetric: float
    forward_witness: int
    backward_witness: int


def hausdorff_estimate(q_vertices, qstar_vertices, tol: float = 1e-9, workers: int = 1) -> HausdorffEstimate:
    """Hausdorff distance between ``conv(Q)`` and ``conv(Q*)``.

    ``forward`` is the largest distance from a Q* vertex to conv(Q),
    ``backward`` the largest distance from a Q vertex to conv(Q*); the
    maximum over a polytope of the (convex) distance to a convex set is
    attained at a vertex, so both are exact up to the projection tolerance.
    """
    fwd, fi = directed_hull_distance(qstar_vertices, q_vertices, tol, workers)
    bwd, bi = directed_hull_distance(q_vertices, qstar_vertices, tol, workers)
    return HausdorffEstimate(forward=fwd, backward=bwd, symmetric=max(fwd, bwd), forward_witness=fi, backward_witness=bi)


def _power_axis(A: np.ndarray, start: np.ndarray, against: Optional[np.ndarray], tol: float, max_iter: int):
    v = start.copy()
    if against is not None:
        v -= (v @ against) * against
    nv = np.linalg.norm(v)
    if nv == 0:
        return None, 0.0
    v /= nv
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        if against is not None:
            w -= (w @ against) * against
        lam = float(v @ w)
        resid = np.linalg.norm(w - lam * v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return None, 0.0
        v = w / nw
        if resid <= tol * max(lam, 1e-300):
            break
    return v, lam


def _principal_axes(R: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Top two principal directions (rows) of the centred matrix R; zero rows where variance vanishes."""
    p = R.shape[1]
    axes = np.zeros((2, p))
    if not np.any(R):
        return axes
    scale = np.max(np.abs(R))
    A = R / scale
    start = A[int(np.argmax(np.einsum("ij,ij->i", A, A)))]
    v1, lam1 = _power_axis(A, start, None, tol, max_iter)
    if v1 is None or lam1 <= 1e-24:
        return axes
    axes[0] = v1
    resid = A - np.outer(A @ v1, v1)
    rn = np.einsum("ij,ij->i", resid, resid)
    if rn.max() > 1e-24 * rn.size and p > 1:
        v2, lam2 = _power_axis(A, resid[int(np.argmax(rn))], v1, tol, max_iter)
        if v2 is not None and lam2 > 1e-20 * lam1:
            axes[1] = v2
    for k in range(2):
        nz = np.flatnonzero(np.abs(axes[k]) > 1e-12)
        if nz.size and axes[k, nz[0]] < 0:
            axes[k] = -axes[k]
    return axes


def pca_project_2d(points, reference=None) -> np.ndarray:
    """Coordinates of ``points`` on the top two principal axes.

    Axes and centring come from ``reference`` when given, otherwise from the
    points themselves. The first clearly nonzero loading of each axis is
    made positive.
    """
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.shape[0] == 0 or P.size == 0:
        raise DataError("no points to project")
    src = P if reference is None else np.atleast_2d(np.asarray(reference, dtype=np.float64))
    if src.shape[1] != P.shape[1]:
        raise DataError(f"reference dimension {src.shape[1]} differs from points dimension {P.shape[1]}")
    mean = src.mean(axis=0)
    axes = _principal_axes(src - mean)
    return (P - mean) @ axes.T


def lazy_max_distance(points: np.ndarray, hull: Hull, bounds: np.ndarray):
    """Exact ``max_i dist(points[i], hull)`` given valid upper ``bounds``; bounds are tightened in place.

    Returns ``(distance, index, evaluations)``. Used when the same point set
    is measured against a growing hull: distances only shrink, so bounds
    from a smaller hull stay valid.
    """
    heap = [(-float(b), i) for i, b in enumerate(bounds)]
    heapq.heapify(heap)
    evals = 0
    best, best_i = -1.0, -1
    while heap:
        negb, i = heap[0]
        if -negb < best:
            break
        heapq.heappop(heap)
        d = min(hull.distance(points[i]), float(bounds[i]))
        evals += 1
        bounds[i] = d
        if d > best or (d == best and i < best_i):
            best, best_i = d, i
    return best, best_i, evals


def covers(points: Sequence, hull_vertices, tol: float = 1e-9) -> bool:
    """True when every point lies in conv(hull_vertices) within ``tol``."""
    hull = Hull(hull_vertices, tol=tol)
    return all(hull.distance(p) <= tol for p in np.atleast_2d(points))
