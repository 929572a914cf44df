"""Compiled coordinate-descent sweeps for the tilted squared-loss problem.

All kernels minimise

    F(beta) = w/2 ||X beta - y||^2 + lam ||beta||_1 - t^T beta

in place on ``beta`` with a fixed cyclic order 0..p-1. They return
``(sweeps, status)`` where status is

    0  converged (max coordinate change <= tol and KKT residual <= tol)
    1  sweep budget exhausted
    2  objective fell below ``floor`` (caller certifies the level is exceeded)
    3  stalled: a sweep moved nothing but the KKT residual is still above tol

Code 4 (iterate left the caller's radius) is produced by the logistic solver only.
"""
import numpy as np
from numba import njit

CONVERGED = 0
MAX_ITER = 1
FLOOR = 2
STALLED = 3
ESCAPED = 4


@njit(cache=True, nogil=True)
def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


@njit(cache=True, nogil=True)
def kkt_from_grad(grad, beta, lam):
    worst = 0.0
    for j in range(beta.shape[0]):
        g = grad[j]
        if beta[j] > 0.0:
            v = abs(g + lam)
        elif beta[j] < 0.0:
            v = abs(g - lam)
        else:
            v = abs(g) - lam
            if v < 0.0:
                v = 0.0
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def cd_gram(G, b, const, lam, beta, tol, max_iter, floor):
    """Gram form: F = 1/2 b'Gb - b'beta + const + lam|beta|_1 with b = w X'y + t."""
    p = beta.shape[0]
    grad = G @ beta - b
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            gjj = G[j, j]
            old = beta[j]
            new = _soft(gjj * old - grad[j], lam) / gjj
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for i in range(p):
                    grad[i] += G[j, i] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if floor > -np.inf:
            obj = const
            for j in range(p):
                obj += 0.5 * beta[j] * (grad[j] + b[j]) - b[j] * beta[j] + lam * abs(beta[j])
            if obj < floor:
                return sweep, FLOOR
        if max_delta <= tol:
            grad = G @ beta - b
            if kkt_from_grad(grad, beta, lam) <= tol:
                return sweep, CONVERGED
            if max_delta == 0.0:
                return sweep, STALLED
    return max_iter, MAX_ITER


@njit(cache=True, nogil=True)
def cd_dense(X, y, w, t, lam, beta, tol, max_iter, floor):
    """Residual-update form on a dense (n, p) design."""
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        col_sq[j] = w * s
    r = y - X @ beta
    grad = np.empty(p)
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            xr = 0.0
            for i in range(n):
                xr += X[i, j] * r[i]
            gj = -w * xr - t[j]
            old = beta[j]
            new = _soft(col_sq[j] * old - gj, lam) / col_sq[j]
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for i in range(n):
                    r[i] -= X[i, j] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if floor > -np.inf:
            obj = 0.5 * w * (r @ r)
            for j in range(p):
                obj += lam * abs(beta[j]) - t[j] * beta[j]
            if obj < floor:
                return sweep, FLOOR
        if max_delta <= tol:
            r = y - X @ beta
            grad = -w * (X.T @ r) - t
            if kkt_from_grad(grad, beta, lam) <= tol:
                return sweep, CONVERGED
            if max_delta == 0.0:
                return sweep, STALLED
    return max_iter, MAX_ITER


@njit(cache=True, nogil=True)
def _csc_residual(indptr, indices, data, y, beta):
    r = y.copy()
    for j in range(beta.shape[0]):
        bj = beta[j]
        if bj != 0.0:
            for k in range(indptr[j], indptr[j + 1]):
                r[indices[k]] -= data[k] * bj
    return r


@njit(cache=True, nogil=True)
def cd_csc(indptr, indices, data, y, w, t, lam, beta, tol, max_iter, floor):
    """Residual-update form on a CSC design (column access only)."""
    p = beta.shape[0]
    col_sq = np.empty(p)
    for j in range(p):
        s = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            s += data[k] * data[k]
        col_sq[j] = w * s
    r = _csc_residual(indptr, indices, data, y, beta)
    grad = np.empty(p)
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            xr = 0.0
            for k in range(indptr[j], indptr[j + 1]):
                xr += data[k] * r[indices[k]]
            gj = -w * xr - t[j]
            old = beta[j]
            new = _soft(col_sq[j] * old - gj, lam) / col_sq[j]
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for k in range(indptr[j], indptr[j + 1]):
                    r[indices[k]] -= data[k] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if floor > -np.inf:
            obj = 0.5 * w * (r @ r)
            for j in range(p):
                obj += lam * abs(beta[j]) - t[j] * beta[j]
            if obj < floor:
                return sweep, FLOOR
        if max_delta <= tol:
            r = _csc_residual(indptr, indices, data, y, beta)
            for j in range(p):
                xr = 0.0
                for k in range(indptr[j], indptr[j + 1]):
                    xr += data[k] * r[indices[k]]
                grad[j] = -w * xr - t[j]
            if kkt_from_grad(grad, beta, lam) <= tol:
                return sweep, CONVERGED
            if max_delta == 0.0:
                return sweep, STALLED
    return max_iter, MAX_ITER
