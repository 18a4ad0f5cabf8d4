"""Multiple-measurement-vector solvers and the l1,2 counterexample constructors.

``solve_l11`` decouples into one basis pursuit per column.  ``solve_l12``
minimizes the sum of row 2-norms with an alternating-direction method:

    X <- Proj_{AX=B}(Z - U)
    Z <- rowshrink(X + U, 1/rho)
    U <- U + X - Z

The projection uses a Cholesky factorization of ``AA'`` computed once.
Row shrinkage produces exact zero rows, so the support of ``Z`` is used to
refit ``X`` by least squares and to build a dual ``Y`` that satisfies the
support equations exactly; when that pair passes the optimality check the
iteration stops early.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bpsolve import (
    DEFAULT_SETTINGS,
    Certificate,
    SolverSettings,
    Status,
    check_smv_certificate,
    solve_bp,
)
from .core import (
    ZERO_TOL,
    ProblemInstance,
    SupportSet,
    as_matrix,
    as_support,
    is_recovered,
    numerical_rank,
)
from .errors import AmbiguousSupport, SearchExhausted


@dataclass
class MmvSolveReport:
    X: np.ndarray
    Y: np.ndarray
    status: Status
    primal_residual: float
    gap: float
    iterations: int
    message: str = ""
    failed_columns: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def norm12(X) -> float:
    """Sum of the 2-norms of the rows of `X`."""
    return float(np.linalg.norm(np.asarray(X, dtype=float), axis=1).sum())


def row_support(X, zero_tol: float = ZERO_TOL) -> np.ndarray:
    return np.flatnonzero(np.linalg.norm(np.asarray(X, dtype=float), axis=1) > zero_tol)


def _check_rhs(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    return A, B


def solve_l11(A, B, settings: SolverSettings = DEFAULT_SETTINGS) -> MmvSolveReport:
    """Minimize the entrywise 1-norm of ``X`` subject to ``AX = B``, column by column."""
    A, B = _check_rhs(A, B)
    n, r = A.shape[1], B.shape[1]
    X = np.zeros((n, r))
    Y = np.zeros((A.shape[0], r))
    status = Status.OPTIMAL
    failed, msgs, iters = [], [], 0
    for k in range(r):
        rep = solve_bp(A, B[:, k], settings)
        X[:, k], Y[:, k] = rep.x, rep.y
        iters += rep.iterations
        if not rep.ok:
            failed.append(k)
            msgs.append(f"column {k}: {rep.status.value}")
            if status is Status.OPTIMAL:
                status = rep.status
    res = float(np.linalg.norm(A @ X - B)) if np.all(np.isfinite(X)) else np.nan
    gap = abs(float(np.abs(X).sum()) - float(np.sum(B * Y)))
    return MmvSolveReport(X, Y, status, res, gap, iters, "; ".join(msgs), failed)


def _row_shrink(V: np.ndarray, t: float) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1)
    scale = np.where(norms > t, 1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
    return V * scale[:, None]


def _refit_pair(A, B, AAt_cho, W, support, feas, dual_tol):
    """Least-squares primal on `support` and a matching dual; ``None`` if either fails."""
    m, n = A.shape
    k = support.size
    if k == 0 or k > m:
        return None
    AI = A[:, support]
    if numerical_rank(AI) < k:
        return None
    XI = np.linalg.lstsq(AI, B, rcond=None)[0]
    if np.linalg.norm(AI @ XI - B) > feas:
        return None
    rn = np.linalg.norm(XI, axis=1)
    if np.any(rn <= ZERO_TOL * max(1.0, rn.max())):
        return None
    N = XI / rn[:, None]
    Y0 = sla.cho_solve(AAt_cho, A @ W)
    # closest Y to Y0 with A_I' Y = N
    corr = np.linalg.lstsq(AI.T, N - AI.T @ Y0, rcond=None)[0]
    Y = Y0 + corr
    G = A.T @ Y
    off = np.ones(n, dtype=bool)
    off[support] = False
    if off.any() and np.max(np.linalg.norm(G[off], axis=1)) > 1.0 + dual_tol:
        return None
    X = np.zeros((n, B.shape[1]))
    X[support] = XI
    return X, Y


def _project_on_rows(A, B, Z, feas):
    """Smallest change to `Z` within its own row support that makes ``AZ = B``."""
    S = np.flatnonzero(np.any(Z != 0.0, axis=1))
    if S.size == 0:
        return None
    AS = A[:, S]
    D = np.linalg.lstsq(AS, B - AS @ Z[S], rcond=None)[0]
    X = np.zeros_like(Z)
    X[S] = Z[S] + D
    if np.linalg.norm(A @ X - B) > feas:
        return None
    return X


def solve_l12(A, B, settings: SolverSettings = DEFAULT_SETTINGS, rho: float = 1.0,
              polish_every: int = 25, relax: float = 1.6) -> MmvSolveReport:
    """Minimize ``sum_j ||X_j||_2`` (rows) subject to ``AX = B``.

    Parameters
    ----------
    A : (m, n) array_like, full row rank
    B : (m, r) array_like
    settings : SolverSettings
        ``admm_max_iter`` bounds the iterations; ``feas_tol`` sets both the
        stopping tolerance of the splitting method and the feasibility test
        of the refit.
    rho : float
        Initial penalty, adapted by residual balancing.
    polish_every : int
        Attempt the support refit every this many iterations.

    Returns
    -------
    MmvSolveReport
        ``Y`` is a dual solution of ``max tr(B'Y) s.t. ||rows of A'Y||_2 <= 1``.
    """
    A, B = _check_rhs(A, B)
    m, n = A.shape
    r = B.shape[1]
    Bnorm = float(np.linalg.norm(B))
    try:
        cho = sla.cho_factor(A @ A.T)
    except np.linalg.LinAlgError:
        return MmvSolveReport(np.full((n, r), np.nan), np.zeros((m, r)), Status.NUMERIC_FAILURE, np.nan, np.nan, 0,
                              "A does not have full row rank")
    Xls = A.T @ sla.cho_solve(cho, B)
    ls_res = float(np.linalg.norm(A @ Xls - B))
    if ls_res > settings.feas_tol * (1.0 + Bnorm):
        return MmvSolveReport(np.full((n, r), np.nan), np.zeros((m, r)), Status.INFEASIBLE, ls_res, np.nan, 0,
                              "columns of B are not in the range of A")
    if Bnorm == 0.0:
        return MmvSolveReport(np.zeros((n, r)), np.zeros((m, r)), Status.OPTIMAL, 0.0, 0.0, 0)

    # Work on B / ||B||_F; Y is invariant under that scaling.
    Bh = B / Bnorm
    Xh_ls = Xls / Bnorm

    # Proj(V) = P V + X_ls with P the projector onto kernel(A)
    P = np.eye(n) - A.T @ sla.cho_solve(cho, A)
    feas = settings.feas_tol * 2.0
    tol = settings.feas_tol
    X = Xh_ls.copy()
    Z = _row_shrink(X, 1.0 / rho)
    U = np.zeros_like(X)
    status = Status.MAX_ITER
    result = None
    it = 0
    for it in range(1, settings.admm_max_iter + 1):
        X = P @ (Z - U) + Xh_ls
        Zold = Z
        Xr = relax * X + (1.0 - relax) * Zold
        V = Xr + U
        norms = np.sqrt(np.einsum("ij,ij->i", V, V))
        t = 1.0 / rho
        Z = V * np.where(norms > t, 1.0 - t / np.maximum(norms, t), 0.0)[:, None]
        U = V - Z
        if it % polish_every == 0:
            supp = np.flatnonzero(norms > t)
            result = _refit_pair(A, Bh, cho, rho * U, supp, feas, 10 * tol)
            if result is not None:
                status = Status.OPTIMAL
                break
        if it % 10 == 0:
            rp = float(np.linalg.norm(X - Z))
            rd = rho * float(np.linalg.norm(Z - Zold))
            if rp <= tol * max(1.0, np.linalg.norm(X), np.linalg.norm(Z)) and rd <= tol * max(1.0, rho * np.linalg.norm(U)):
                status = Status.OPTIMAL
                break
            if rp > 10 * rd:
                rho *= 2.0
                U /= 2.0
            elif rd > 10 * rp:
                rho /= 2.0
                U *= 2.0

    if result is None:
        # the loop stopped without a certified refit; retry on relative-threshold supports
        zn = np.sqrt(np.einsum("ij,ij->i", Z, Z))
        for rel in (1e-8, 1e-6, 1e-4):
            supp = np.flatnonzero(zn > rel * zn.max()) if zn.max() > 0 else np.zeros(0, dtype=int)
            result = _refit_pair(A, Bh, cho, rho * U, supp, feas, 10 * tol)
            if result is not None:
                status = Status.OPTIMAL
                break
    if result is not None:
        Xh, Y = result
    else:
        Xh = _project_on_rows(A, Bh, Z, feas)
        if Xh is None:
            Xh = X
        Y = sla.cho_solve(cho, A @ (rho * U))
    Xout = Xh * Bnorm
    res = float(np.linalg.norm(A @ Xout - B))
    gap = abs(norm12(Xout) - float(np.sum(B * Y)))
    msg = "" if status is Status.OPTIMAL else "iteration limit reached"
    return MmvSolveReport(Xout, Y, status, res, gap, it, msg)


def check_l12_certificate(A, X, Y, strict_tol: float = 1e-6, zero_tol: float = ZERO_TOL,
                          support=None) -> Certificate:
    """Classify ``(X, Y)`` against the l1,2 optimality and uniqueness conditions.

    On the row support ``(A'Y)_j`` must equal the normalized row ``X_j``; off
    it ``||(A'Y)_j||_2`` must be ``<= 1 - strict_tol`` for ``UNIQUE_OPTIMAL``
    (plus full column rank of ``A_support``) or ``<= 1 + strict_tol`` for
    ``OPTIMAL``.

    Raises
    ------
    AmbiguousSupport
        If `support` is given and one of its rows of `X` is zero.
    """
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    m, n = A.shape
    if X.shape[0] != n or Y.shape != (m, X.shape[1]):
        raise ValueError(f"dimension mismatch: A {A.shape}, X {X.shape}, Y {Y.shape}")
    norms = np.linalg.norm(X, axis=1)
    if support is None:
        on = norms > zero_tol
    else:
        idx = as_support(support, n).array
        if np.any(norms[idx] <= zero_tol):
            raise AmbiguousSupport("a row inside the declared support is zero")
        on = np.zeros(n, dtype=bool)
        on[idx] = True
    G = A.T @ Y
    if np.any(np.abs(G[on] - X[on] / norms[on, None]) > strict_tol):
        return Certificate.INVALID
    off = np.linalg.norm(G[~on], axis=1)
    if np.any(off > 1.0 + strict_tol):
        return Certificate.INVALID
    if np.all(off <= 1.0 - strict_tol) and numerical_rank(A[:, on]) == int(on.sum()):
        return Certificate.UNIQUE_OPTIMAL
    return Certificate.OPTIMAL


# -- counterexamples -------------------------------------------------------------


def _columns_unit_and_distinct(A, tol=1e-8) -> bool:
    norms = np.linalg.norm(A, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        return False
    G = np.abs(A.T @ A)
    np.fill_diagonal(G, 0.0)
    return bool(np.all(G < 1.0 - tol))


def construct_diag_counterexample(A, nnz_count: int, rng: np.random.Generator) -> ProblemInstance:
    """``X0 = diag(x)`` with zero columns removed, for `x` with `nnz_count` nonzeros.

    Each column of ``X0`` is one-sparse, so column-wise l1 recovers it,
    while ``A'Y`` would have to equal a rank-``nnz_count`` matrix for the
    l1,2 optimality conditions to hold at ``X0``.

    Requires ``m < n``, ``m + 1 <= nnz_count <= n`` and unit-norm columns of
    `A` with no two collinear.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    if m >= n:
        raise ValueError("A must have more columns than rows")
    if nnz_count > n:
        raise ValueError(f"nnz_count={nnz_count} exceeds n={n}")
    if nnz_count < m + 1:
        raise ValueError(f"nnz_count must be at least m+1={m + 1}")
    if not _columns_unit_and_distinct(A):
        raise ValueError("A needs unit-norm, pairwise non-collinear columns")
    rows = np.sort(rng.choice(n, size=nnz_count, replace=False))
    vals = rng.standard_normal(nnz_count)
    X0 = np.zeros((n, nnz_count))
    X0[rows, np.arange(nnz_count)] = vals
    return ProblemInstance(A, X0, SupportSet.of(rows.tolist(), n))


DEFAULT_GAMMA_GRID = tuple(np.logspace(-4, np.log10(0.5), 25))


def gamma_mixture(s, f, gamma: float) -> np.ndarray:
    """The two-column matrix ``[(1 - gamma) s, gamma f]``."""
    return np.column_stack([(1.0 - gamma) * np.asarray(s, float), gamma * np.asarray(f, float)])


def _bp_recovers(A, x0, settings):
    rep = solve_bp(A, A @ x0, settings)
    return rep, is_recovered(rep.x, x0, settings.recovery_tol)


@dataclass
class L12Witness:
    """Output of :func:`construct_l12_succeeds_l11_fails`."""

    instance: ProblemInstance
    gamma: float
    s: np.ndarray
    f: np.ndarray
    y: np.ndarray

    def __iter__(self):
        # unpacks as (instance, gamma)
        return iter((self.instance, self.gamma))


def construct_l12_succeeds_l11_fails(A, I, rng: np.random.Generator, gamma_grid=DEFAULT_GAMMA_GRID,
                                     settings: SolverSettings = DEFAULT_SETTINGS, budget: int = 200,
                                     pair_budget: int = 5) -> L12Witness:
    """Find ``X0 = [(1-g) s, g f]`` on support `I` recovered by l1,2 but not l1,1.

    `s` is drawn until basis pursuit recovers it with a strict dual
    certificate, `f` until basis pursuit fails on it (each within `budget`
    draws).  The grid is then scanned in increasing order for the first
    ``g`` at which :func:`solve_l12` recovers ``X0`` while :func:`solve_l11`
    does not.  Up to `pair_budget` ``(s, f)`` pairs are tried.

    Raises
    ------
    SearchExhausted
        If no suitable vectors or no working ``g`` are found.
    """
    A = as_matrix(A, "A")
    n = A.shape[1]
    I = as_support(I, n)
    idx = I.array
    tol = settings.recovery_tol

    def draw():
        x = np.zeros(n)
        x[idx] = rng.standard_normal(idx.size)
        return x

    for _ in range(pair_budget):
        s = y = f = None
        for _ in range(budget):
            cand = draw()
            rep, ok = _bp_recovers(A, cand, settings)
            if ok and check_smv_certificate(A, cand, rep.y) is Certificate.UNIQUE_OPTIMAL:
                s, y = cand, rep.y
                break
        for _ in range(budget):
            cand = draw()
            _, ok = _bp_recovers(A, cand, settings)
            if not ok:
                f = cand
                break
        if s is None or f is None:
            raise SearchExhausted(
                f"no {'recoverable' if s is None else 'unrecoverable'} vector on the support within {budget} draws"
            )
        for g in sorted(gamma_grid):
            if not 0.0 < g < 1.0:
                continue
            X0 = gamma_mixture(s, f, g)
            B = A @ X0
            if is_recovered(solve_l11(A, B, settings).X, X0, tol):
                continue
            if is_recovered(solve_l12(A, B, settings).X, X0, tol):
                return L12Witness(ProblemInstance(A, X0, I, B), float(g), s, f, y)
    raise SearchExhausted(f"no gamma in the grid worked for {pair_budget} (s, f) pairs")
