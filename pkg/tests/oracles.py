"""Brute-force and closed-form reference values used by the tests."""
import numpy as np


def grid_hull_distance(b, V, n: int = 20000) -> float:
    """Distance from b to conv(V) for at most three vertices.

    The first weight runs over a grid of step 1/n; the split of the remaining
    mass between the other two vertices is a 1-D convex quadratic, minimised
    exactly by clipping. Every point of the plain simplex grid of step 1/n is
    covered, so this is at least as accurate as scanning that grid.
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64)
    k = V.shape[0]
    if k == 1:
        return float(np.linalg.norm(b - V[0]))
    if k == 2:
        a = np.linspace(0.0, 1.0, n + 1)[:, None]
        X = a * V[0] + (1 - a) * V[1]
        return float(np.min(np.linalg.norm(X - b, axis=1)))
    if k != 3:
        raise ValueError("oracle handles at most three vertices")
    a1 = np.linspace(0.0, 1.0, n + 1)[:, None]
    m = 1.0 - a1
    base = a1 * V[0] + m * V[2] - b
    direc = V[1] - V[2]
    dd = float(direc @ direc)
    if dd == 0.0:
        s = np.zeros_like(m)
    else:
        s = np.clip(-(base @ direc)[:, None] / dd, 0.0, m)
    return float(np.min(np.linalg.norm(base + s * direc, axis=1)))


def segment_distance(b, a, c):
    """Closed-form projection of b onto the segment [a, c]; returns (distance, witness)."""
    b, a, c = (np.asarray(v, dtype=np.float64) for v in (b, a, c))
    e = c - a
    ee = float(e @ e)
    t = 0.0 if ee == 0.0 else min(max(float((b - a) @ e) / ee, 0.0), 1.0)
    w = a + t * e
    return float(np.linalg.norm(b - w)), w
