"""L1-regularized objectives and their solvers.

Two losses are supported, both with an l1 penalty ``lam * ||beta||_1``:

* ``squared``:  w/2 ||X beta - y||^2
* ``logistic``: w * sum_i log(1 + exp(-y_i x_i^T beta))

where ``w = 1/n`` for ``scale="mean"`` (the default) and ``w = 1`` for
``scale="sum"`` (the plain 1/2 factor of the two- and three-dimensional
demonstration problems).

``fit`` minimises the objective minus an optional linear tilt ``t^T beta``.
The sampler uses the tilt to solve the inner maximisation of the Lagrange
dual of ``max d^T beta s.t. L(beta) <= nu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from . import _kernels
from .errors import ConfigError, DataError

KINDS = ("squared", "logistic")
SCALES = ("mean", "sum")

_STATUS = {
    _kernels.CONVERGED: "converged",
    _kernels.MAX_ITER: "max_iter",
    _kernels.FLOOR: "floor",
    _kernels.STALLED: "stalled",
    _kernels.ESCAPED: "escaped",
}


def _zero_columns(X) -> np.ndarray:
    if sp.issparse(X):
        Xc = sp.csc_matrix(X)
        nz = np.zeros(Xc.shape[1], dtype=bool)
        cols = np.repeat(np.arange(Xc.shape[1]), np.diff(Xc.indptr))
        nz[cols[Xc.data != 0]] = True
        return np.flatnonzero(~nz)
    return np.flatnonzero(~np.any(X != 0, axis=0))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x p, rows are observations) and response ``y``.

    ``X`` may be a dense array or any scipy sparse matrix (stored as CSC).
    Columns that are exactly zero are rejected.
    """

    X: object
    y: np.ndarray

    def __post_init__(self):
        X = self.X
        if sp.issparse(X):
            X = sp.csc_matrix(X, dtype=np.float64)
            X.sort_indices()
        else:
            X = np.array(X, dtype=np.float64, copy=True)
            if X.ndim != 2:
                raise DataError(f"X must be two-dimensional, got shape {X.shape}")
        y = np.array(self.y, dtype=np.float64, copy=True).ravel()
        n, p = X.shape
        if n == 0 or p == 0:
            raise DataError(f"empty design matrix of shape {X.shape}")
        if y.shape[0] != n:
            raise DataError(f"X has {n} rows but y has {y.shape[0]} entries")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X.data if sp.issparse(X) else X)):
            raise DataError("non-finite values in dataset")
        zero = _zero_columns(X)
        if zero.size:
            listed = ", ".join(str(j + 1) for j in zero[:20])
            more = "" if zero.size <= 20 else f" (and {zero.size - 20} more)"
            raise DataError(f"zero column(s) in X: {listed}{more} (1-based)")
        if not sp.issparse(X):
            X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.X)

    def dense(self) -> np.ndarray:
        return self.X.toarray() if self.is_sparse else np.asarray(self.X)


@dataclass(frozen=True, eq=False)
class LossModel:
    kind: str
    lam: float
    dataset: Dataset
    scale: str = "mean"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown loss kind {self.kind!r}; expected one of {KINDS}")
        if self.scale not in SCALES:
            raise ConfigError(f"unknown scale {self.scale!r}; expected one of {SCALES}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be positive and finite, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))
        if self.kind == "logistic":
            bad = np.flatnonzero(np.abs(self.dataset.y) != 1.0)
            if bad.size:
                raise DataError(
                    f"logistic loss needs labels in {{-1, +1}}; row {bad[0] + 1} has {self.dataset.y[bad[0]]}"
                )

    @property
    def p(self) -> int:
        return self.dataset.p

    @property
    def weight(self) -> float:
        return 1.0 / self.dataset.n if self.scale == "mean" else 1.0

    @cached_property
    def gram(self):
        """(G, c, const) with G = w X'X, c = w X'y, const = w/2 y'y."""
        X, y, w = self.dataset.X, self.dataset.y, self.weight
        if self.dataset.is_sparse:
            G = (X.T @ X).toarray()
        else:
            G = X.T @ X
        G = np.ascontiguousarray(w * G)
        c = w * np.asarray(X.T @ y).ravel()
        return G, c, 0.5 * w * float(y @ y)

    @cached_property
    def lipschitz(self) -> float:
        """Upper bound on the Lipschitz constant of the smooth part's gradient."""
        X = self.dataset.X
        if self.dataset.is_sparse:
            from scipy.sparse.linalg import norm as frobenius, svds

            if min(X.shape) > 1:
                smax = svds(X, k=1, return_singular_vectors=False, tol=1e-10)[0]
            else:
                smax = frobenius(X)
        else:
            smax = np.linalg.norm(X, 2)
        curv = 1.0 if self.kind == "squared" else 0.25
        return 1.0001 * curv * self.weight * float(smax) ** 2

    def margin(self, beta: np.ndarray) -> np.ndarray:
        return np.asarray(self.dataset.X @ beta).ravel()

    def smooth(self, beta: np.ndarray) -> float:
        z = self.margin(beta)
        y = self.dataset.y
        if self.kind == "squared":
            r = z - y
            return 0.5 * self.weight * float(r @ r)
        return self.weight * float(np.sum(np.logaddexp(0.0, -y * z)))

    def smooth_grad(self, beta: np.ndarray) -> np.ndarray:
        z = self.margin(beta)
        y = self.dataset.y
        if self.kind == "squared":
            v = z - y
        else:
            v = -y * expit(-y * z)
        return self.weight * np.asarray(self.dataset.X.T @ v).ravel()


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 1_000_000
    gram_max_p: int = 20_000
    accelerate: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"solver tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"solver max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FitResult:
    beta: np.ndarray
    loss: float
    iterations: int
    kkt_residual: float
    status: str = "converged"
    objective: float = field(default=float("nan"))

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _check_beta(model: LossModel, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.shape[0] != model.p:
        raise DataError(f"coefficient vector has length {beta.shape[0]}, model has p={model.p}")
    return beta


def _check_tilt(model: LossModel, tilt) -> Optional[np.ndarray]:
    if tilt is None:
        return None
    tilt = np.asarray(tilt, dtype=np.float64).ravel()
    if tilt.shape[0] != model.p:
        raise DataError(f"tilt has length {tilt.shape[0]}, model has p={model.p}")
    return tilt


def eval_loss(model: LossModel, beta) -> float:
    """Regularized loss L(beta)."""
    beta = _check_beta(model, beta)
    return model.smooth(beta) + model.lam * float(np.sum(np.abs(beta)))


def tilted_objective(model: LossModel, beta, linear_tilt=None) -> float:
    beta = _check_beta(model, beta)
    val = eval_loss(model, beta)
    tilt = _check_tilt(model, linear_tilt)
    if tilt is not None:
        val -= float(tilt @ beta)
    return val


def kkt_residual(model: LossModel, beta, linear_tilt=None) -> float:
    """Largest coordinate-wise distance from 0 to the subdifferential of L(beta) - t'beta."""
    beta = _check_beta(model, beta)
    g = model.smooth_grad(beta)
    tilt = _check_tilt(model, linear_tilt)
    if tilt is not None:
        g = g - tilt
    return float(_kernels.kkt_from_grad(g, beta, model.lam))


def _soft(z, thresh):
    return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)


def _fit_squared(model, cfg, t, beta, floor):
    if model.p <= cfg.gram_max_p:
        G, c, const = model.gram
        return _kernels.cd_gram(G, c + t, const, model.lam, beta, cfg.tol, cfg.max_iter, floor)
    ds = model.dataset
    if ds.is_sparse:
        X = ds.X
        return _kernels.cd_csc(
            X.indptr, X.indices, X.data, ds.y, model.weight, t, model.lam, beta, cfg.tol, cfg.max_iter, floor
        )
    X = np.ascontiguousarray(ds.X)
    return _kernels.cd_dense(X, ds.y, model.weight, t, model.lam, beta, cfg.tol, cfg.max_iter, floor)


def _fit_logistic(model, cfg, t, beta, floor, radius):
    # Proximal gradient with backtracking; the step never drops below 1/Lipschitz,
    # which always satisfies the sufficient-decrease test.
    lam = model.lam
    step_min = 1.0 / model.lipschitz
    # Steps passing that test never move away from any minimiser, so an iterate
    # farther than 2r + |x0| from the origin rules out minimisers within radius r.
    escape = math.inf if cfg.accelerate else 2.0 * radius + float(np.linalg.norm(beta))

    def f(b):
        return model.smooth(b) - float(t @ b)

    def grad(b):
        return model.smooth_grad(b) - t

    step = step_min
    x = beta.copy()
    fx, gx = f(x), grad(x)
    y_pt, fy, gy = x, fx, gx
    theta = 1.0
    for it in range(1, cfg.max_iter + 1):
        while True:
            z = _soft(y_pt - step * gy, step * lam)
            diff = z - y_pt
            fz = f(z)
            bound = fy + float(gy @ diff) + float(diff @ diff) / (2.0 * step)
            if step <= step_min or fz <= bound + 1e-15 * (1.0 + abs(fy)):
                break
            step = max(0.5 * step, step_min)
        move = np.max(np.abs(z - x))
        if cfg.accelerate:
            theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            y_pt = z + ((theta - 1.0) / theta_next) * (z - x)
            theta = theta_next
            x = z
            fy, gy = f(y_pt), grad(y_pt)
            fx = fz
        else:
            x, fx = z, fz
            y_pt, fy, gy = x, fx, grad(x)
        beta[:] = x
        obj = fx + lam * float(np.sum(np.abs(x)))
        if obj < floor:
            return it, _kernels.FLOOR
        if escape < math.inf and float(np.linalg.norm(x)) > escape:
            return it, _kernels.ESCAPED
        if move <= cfg.tol:
            gx = gy if not cfg.accelerate else grad(x)
            if _kernels.kkt_from_grad(gx, x, lam) <= cfg.tol:
                return it, _kernels.CONVERGED
            if move == 0.0 and not cfg.accelerate:
                return it, _kernels.STALLED
        step *= 1.5
    return cfg.max_iter, _kernels.MAX_ITER


def fit(
    model: LossModel,
    cfg: Optional[SolverConfig] = None,
    linear_tilt=None,
    *,
    beta0=None,
    objective_floor: float = -math.inf,
    escape_radius: float = math.inf,
) -> FitResult:
    """Minimise ``L(beta) - linear_tilt^T beta``.

    Squared loss runs cyclic coordinate descent (Gram form up to
    ``cfg.gram_max_p`` features, residual updates beyond); logistic loss runs
    proximal gradient with backtracking. ``beta0`` warm-starts the iteration.

    If the tilted objective drops below ``objective_floor`` the solve stops
    early with status ``"floor"``; the sampler uses this to cut off problems
    whose minimiser provably lies outside the level set (including unbounded
    ones). For logistic loss without acceleration, ``escape_radius`` r ends
    the solve with status ``"escaped"`` once an iterate is provably not
    heading to any minimiser of Euclidean norm at most r. Non-convergence is
    reported through ``status``, never raised.
    """
    cfg = cfg or SolverConfig()
    tilt = _check_tilt(model, linear_tilt)
    t = np.zeros(model.p) if tilt is None else tilt
    beta = np.zeros(model.p) if beta0 is None else _check_beta(model, beta0).copy()
    if model.kind == "squared":
        iters, code = _fit_squared(model, cfg, t, beta, float(objective_floor))
    else:
        iters, code = _fit_logistic(model, cfg, t, beta, float(objective_floor), float(escape_radius))
    loss = eval_loss(model, beta)
    return FitResult(
        beta=beta,
        loss=loss,
        iterations=int(iters),
        kkt_residual=kkt_residual(model, beta, tilt),
        status=_STATUS[int(code)],
        objective=loss - float(t @ beta),
    )
