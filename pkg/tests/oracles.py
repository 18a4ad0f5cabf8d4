"""Independent reference implementations used only by the tests."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


def lp_vertex_min(c, E, b, tol=1e-9):
    """Minimum of ``c'z`` over ``{Ez = b, z >= 0}`` by enumerating basic feasible solutions.

    Returns ``(value, z)`` or ``None`` when no vertex exists.  Only valid
    for bounded problems, which is all the tests feed it.
    """
    E = np.asarray(E, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    rank = np.linalg.matrix_rank(E)
    # keep a maximal set of independent rows
    rows = []
    for i in range(E.shape[0]):
        if np.linalg.matrix_rank(E[rows + [i]]) > len(rows):
            rows.append(i)
    Er, br = E[rows], b[rows]
    if np.linalg.norm(E @ np.linalg.lstsq(Er, br, rcond=None)[0] - b) > 1e-8 * (1 + np.linalg.norm(b)):
        return None
    best = None
    for cols in combinations(range(E.shape[1]), rank):
        Bm = Er[:, cols]
        if abs(np.linalg.det(Bm)) < 1e-12:
            continue
        zb = np.linalg.solve(Bm, br)
        if np.any(zb < -tol):
            continue
        z = np.zeros(E.shape[1])
        z[list(cols)] = np.maximum(zb, 0.0)
        val = float(c @ z)
        if best is None or val < best[0]:
            best = (val, z)
    return best


def bp_vertex_min(A, b):
    """l1 basis pursuit optimum via the split LP ``x = u - v``."""
    A = np.asarray(A, float)
    n = A.shape[1]
    res = lp_vertex_min(np.ones(2 * n), np.hstack([A, -A]), b)
    if res is None:
        return None
    val, z = res
    return val, z[:n] - z[n:]


def cvx_l12(A, B):
    """Sum-of-row-norms minimizer from cvxpy with a conic interior-point solver."""
    import cvxpy as cp

    X = cp.Variable((A.shape[1], B.shape[1]))
    prob = cp.Problem(cp.Minimize(cp.sum(cp.norm(X, 2, axis=1))), [A @ X == B])
    prob.solve(solver="CLARABEL")
    return prob.value, X.value


@lru_cache(maxsize=None)
def cnd_recurrence(n, d):
    if d == 0:
        return 0
    if n == 1:
        return 2
    return cnd_recurrence(n - 1, d - 1) + cnd_recurrence(n - 1, d)


def orthants_hit(n, d, rng, samples=20000, subspaces=20):
    """Largest number of orthants met by random d-dimensional subspaces of R^n (Monte Carlo)."""
    best = 0
    for _ in range(subspaces):
        basis = rng.standard_normal((n, d))
        pts = rng.standard_normal((samples, d)) @ basis.T
        best = max(best, len({tuple(r) for r in (pts > 0).astype(int)}))
    return best
