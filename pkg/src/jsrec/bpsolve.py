"""Single-measurement-vector solvers.

Basis pursuit ``min ||x||_1 s.t. Ax = b`` is solved as the linear program

    min 1'(u + v)   s.t.   A(u - v) = b,   u, v >= 0

with a dense Mehrotra predictor-corrector interior-point method.  The LP
multipliers of the equality constraints are a solution ``y`` of the dual
``max b'y s.t. ||A'y||_inf <= 1``, which is what the optimality
certificate in :func:`check_smv_certificate` consumes.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .core import ZERO_TOL, as_matrix, as_support, as_vector, numerical_rank


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERIC_FAILURE = "NumericFailure"


class Certificate(enum.Enum):
    UNIQUE_OPTIMAL = "UniqueOptimal"
    OPTIMAL = "Optimal"
    INVALID = "Invalid"


class RankDeficientWarning(UserWarning):
    """Restricted least squares was solved on a rank-deficient column set."""


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances shared by every solver in the package.

    ``recovery_tol`` is the entrywise error below which a signal counts
    as recovered.  ``admm_max_iter`` bounds the splitting method used for
    the row-norm problem; ``max_iter`` bounds interior-point iterations.
    """

    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iter: int = 100
    recovery_tol: float = 1e-5
    admm_max_iter: int = 20000

    def __post_init__(self):
        if min(self.feas_tol, self.gap_tol, self.recovery_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.recovery_tol <= self.feas_tol:
            raise ValueError("recovery_tol must exceed feas_tol")
        if self.max_iter < 1 or self.admm_max_iter < 1:
            raise ValueError("iteration limits must be positive")

    def updated(self, **overrides) -> "SolverSettings":
        return replace(self, **overrides)


DEFAULT_SETTINGS = SolverSettings()


@dataclass
class LPResult:
    """Primal ``x``, equality multipliers ``y`` and reduced costs ``s``."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: Status
    objective: float
    primal_residual: float
    duality_gap: float
    iterations: int
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class SolveReport:
    """Result of :func:`solve_bp`.

    ``support`` holds the indices kept by the final polishing step (the
    nonzero entries of ``x``).
    """

    x: np.ndarray
    y: np.ndarray
    status: Status
    primal_residual: float
    duality_gap: float
    iterations: int
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    polished: bool = False
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def objective(self) -> float:
        return float(np.abs(self.x).sum())


# -- generic LP --------------------------------------------------------------


def _independent_rows(A: np.ndarray) -> np.ndarray:
    """Indices of a maximal set of linearly independent rows of `A`."""
    if A.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return np.zeros(0, dtype=np.intp)
    rank = int(np.sum(d > d[0] * 1e-10 * max(A.shape)))
    return np.sort(piv[:rank])


def _step_to_boundary(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


class _NormalSolver:
    """Factor ``A diag(d) A'``, regularizing if Cholesky breaks down."""

    def __init__(self, A: np.ndarray, d: np.ndarray):
        M = (A * d) @ A.T
        M = 0.5 * (M + M.T)
        scale = max(float(np.max(np.diag(M))), 1.0)
        for reg in (0.0, 1e-14, 1e-12, 1e-10):
            try:
                self.cho = sla.cho_factor(M + reg * scale * np.eye(M.shape[0]), check_finite=False)
                return
            except (np.linalg.LinAlgError, ValueError):
                continue
        self.cho = None
        self.M = M

    def solve(self, r: np.ndarray) -> np.ndarray:
        if self.cho is not None:
            return sla.cho_solve(self.cho, r, check_finite=False)
        return np.linalg.lstsq(self.M, r, rcond=None)[0]


def _mehrotra(c, A, b, feas_tol, gap_tol, max_iter):
    """Primal-dual predictor-corrector for ``min c'x, Ax = b, x >= 0``.

    `A` must have full row rank.  Returns ``(x, y, s, status, iterations)``.
    """
    m, N = A.shape
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(c)

    # Mehrotra's starting point.
    AAt = _NormalSolver(A, np.ones(N))
    x = A.T @ AAt.solve(b)
    y = AAt.solve(A @ c)
    s = c - A.T @ y
    x += max(-1.5 * x.min(), 0.0)
    s += max(-1.5 * s.min(), 0.0)
    xs = float(x @ s)
    if xs <= 0:
        x += 1.0
        s += 1.0
        xs = float(x @ s)
    x += 0.5 * xs / s.sum()
    s += 0.5 * xs / x.sum()

    status = Status.MAX_ITER
    it = 0
    big = 1e14
    for it in range(1, max_iter + 1):
        rb = A @ x - b
        rc = A.T @ y + s - c
        mu = float(x @ s) / N
        pobj = float(c @ x)
        dobj = float(b @ y)
        if (
            np.linalg.norm(rb) <= feas_tol * bnorm
            and np.linalg.norm(rc) <= feas_tol * cnorm
            and abs(pobj - dobj) <= gap_tol * (1.0 + abs(pobj))
        ):
            status = Status.OPTIMAL
            it -= 1
            break
        if np.max(x) > big * bnorm and np.linalg.norm(rc) > feas_tol * cnorm:
            status = Status.UNBOUNDED
            break
        if np.max(np.abs(y)) > big * cnorm and np.linalg.norm(rb) > feas_tol * bnorm:
            status = Status.INFEASIBLE
            break
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(s))):
            status = Status.NUMERIC_FAILURE
            break

        d = x / s
        ns = _NormalSolver(A, d)

        def direction(rxs):
            rhs = -rb - A @ (rxs / s + d * rc)
            dy = ns.solve(rhs)
            dx = rxs / s + d * rc + d * (A.T @ dy)
            ds = -rc - A.T @ dy
            return dx, dy, ds

        dx_a, dy_a, ds_a = direction(-x * s)
        ap = min(1.0, _step_to_boundary(x, dx_a))
        ad = min(1.0, _step_to_boundary(s, ds_a))
        mu_aff = float((x + ap * dx_a) @ (s + ad * ds_a)) / N
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        dx, dy, ds = direction(-x * s - dx_a * ds_a + sigma * mu)
        eta = max(0.9, 1.0 - 10.0 * mu) if mu < 1 else 0.9
        eta = min(eta, 0.99995)
        ap = min(1.0, eta * _step_to_boundary(x, dx))
        ad = min(1.0, eta * _step_to_boundary(s, ds))
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
        if np.any(x <= 0) or np.any(s <= 0):
            x = np.maximum(x, np.finfo(float).tiny)
            s = np.maximum(s, np.finfo(float).tiny)
    return x, y, s, status, it


def solve_lp(c, A_eq, b_eq, lower_bounds=None, settings: SolverSettings = DEFAULT_SETTINGS) -> LPResult:
    """Solve ``min c'x  s.t.  A_eq x = b_eq,  x >= lower_bounds``.

    Entries of `lower_bounds` equal to ``-inf`` mark free variables (split
    internally into two nonnegative parts); ``None`` means all zero.
    Redundant equality rows are removed before the interior-point solve
    and receive a zero multiplier.

    Returns
    -------
    LPResult
        ``status`` distinguishes ``INFEASIBLE``, ``UNBOUNDED`` and
        ``NUMERIC_FAILURE``; the solver does not raise on these.
    """
    c = as_vector(c, "c")
    A = np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b_eq, dtype=np.float64))
    n = c.size
    if A.shape != (b.size, n):
        raise ValueError(f"A_eq has shape {A.shape}, expected {(b.size, n)}")
    lb = np.zeros(n) if lower_bounds is None else np.asarray(lower_bounds, dtype=np.float64).copy()
    if lb.shape != (n,):
        raise ValueError("lower_bounds must have one entry per variable")

    free = np.isneginf(lb)
    lb[free] = 0.0
    # x = lb + x_pos - x_neg (x_neg only for free variables)
    Afull = np.hstack([A, -A[:, free]])
    cfull = np.concatenate([c, -c[free]])
    bfull = b - A @ lb
    const = float(c @ lb)

    def unpack(z):
        x = lb + z[:n]
        x[free] -= z[n:]
        return x

    feas = settings.feas_tol * (1.0 + np.linalg.norm(b))
    keep = _independent_rows(Afull)
    if keep.size:
        xls = np.linalg.lstsq(Afull[keep], bfull[keep], rcond=None)[0]
        ls_res = np.linalg.norm(Afull @ xls - bfull)
    else:
        ls_res = np.linalg.norm(bfull)
    m = b.size
    if ls_res > feas:
        return LPResult(
            np.full(n, np.nan), np.zeros(m), np.zeros(n), Status.INFEASIBLE, np.nan, float(ls_res), np.nan, 0,
            "equality constraints are inconsistent",
        )
    if keep.size == 0:
        # Only the bounds remain.
        if np.any(cfull < 0):
            return LPResult(np.full(n, np.nan), np.zeros(m), c.copy(), Status.UNBOUNDED, -np.inf, 0.0, np.nan, 0,
                            "objective decreases along a bound-feasible ray")
        z = np.zeros(cfull.size)
        return LPResult(unpack(z), np.zeros(m), c.copy(), Status.OPTIMAL, const, 0.0, 0.0, 0)

    Ar, br = Afull[keep], bfull[keep]
    z, yr, sr, status, it = _mehrotra(cfull, Ar, br, settings.feas_tol, settings.gap_tol, settings.max_iter)
    y = np.zeros(m)
    y[keep] = yr
    x = unpack(z)
    res = float(np.linalg.norm(A @ x - b))
    obj = float(c @ x)
    gap = abs(float(cfull @ z) - float(br @ yr))
    msg = "" if status is Status.OPTIMAL else f"interior point stopped: {status.value}"
    return LPResult(x, y, sr[:n].copy(), status, obj, res, gap, it, msg)


# -- basis pursuit -------------------------------------------------------------


def _try_polish(A, b, x, support, feas, gap_tol):
    """Refit `x` on `support` by least squares; return the refit or ``None``."""
    k = support.size
    if k == 0:
        return np.zeros_like(x) if np.linalg.norm(b) <= feas else None
    if k > A.shape[0]:
        return None
    AS = A[:, support]
    if numerical_rank(AS) < k:
        return None
    xs = np.linalg.lstsq(AS, b, rcond=None)[0]
    if np.linalg.norm(AS @ xs - b) > feas:
        return None
    if np.any(np.sign(xs) != np.sign(x[support])):
        return None
    xn = np.zeros_like(x)
    xn[support] = xs
    l1 = np.abs(x).sum()
    if np.abs(xn).sum() > l1 + 10 * gap_tol * (1.0 + l1):
        return None
    return xn


def solve_bp(A, b, settings: SolverSettings = DEFAULT_SETTINGS) -> SolveReport:
    """Basis pursuit: minimize ``||x||_1`` subject to ``Ax = b``.

    The right-hand side is rescaled to unit 2-norm before the LP solve
    and the answer scaled back, so ``solve_bp(A, a*b)`` equals
    ``a * solve_bp(A, b)`` for ``a > 0``.  After the interior-point solve,
    entries with magnitude ``<= 10*feas_tol`` are dropped and the rest are
    refit by least squares; the refit replaces the iterate only when it is
    feasible, sign-consistent and not worse in objective.
    """
    A = as_matrix(A, "A")
    b = as_vector(b, "b")
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"b has length {b.size}, expected {m}")

    bnorm = float(np.linalg.norm(b))
    feas_abs = settings.feas_tol * (1.0 + bnorm)
    xls = np.linalg.lstsq(A, b, rcond=None)[0]
    ls_res = float(np.linalg.norm(A @ xls - b))
    if ls_res > feas_abs:
        return SolveReport(
            np.full(n, np.nan), np.zeros(m), Status.INFEASIBLE, ls_res, np.nan, 0,
            message="b is not in the range of A",
        )
    if bnorm == 0.0:
        return SolveReport(np.zeros(n), np.zeros(m), Status.OPTIMAL, 0.0, 0.0, 0, polished=True)

    beta = bnorm
    bh = b / beta
    lp = solve_lp(np.ones(2 * n), np.hstack([A, -A]), bh, settings=settings)
    if lp.status not in (Status.OPTIMAL, Status.MAX_ITER):
        return SolveReport(
            np.full(n, np.nan), lp.y, lp.status, np.nan, np.nan, lp.iterations, message=lp.message,
        )
    u, v = lp.x[:n], lp.x[n:]
    xh = u - v
    y = lp.y

    feas_h = settings.feas_tol * (1.0 + 1.0)
    polished = None
    if lp.status is Status.OPTIMAL or lp.primal_residual <= feas_h:
        support = np.flatnonzero(np.abs(xh) > 10 * settings.feas_tol)
        polished = _try_polish(A, bh, xh, support, feas_h, settings.gap_tol)
        if polished is None:
            # complementarity indicator: primal value dominates its slack
            su, sv = lp.s[:n], lp.s[n:]
            ind = np.flatnonzero((u > su) | (v > sv))
            if not np.array_equal(ind, support):
                polished = _try_polish(A, bh, xh, ind, feas_h, settings.gap_tol)
    if polished is not None:
        xh = polished

    x = beta * xh
    res = float(np.linalg.norm(A @ x - b))
    l1 = float(np.abs(x).sum())
    gap = abs(l1 - float(b @ y))
    dual_inf = max(0.0, float(np.max(np.abs(A.T @ y))) - 1.0) if n else 0.0
    status = lp.status
    if status is Status.OPTIMAL and not (
        res <= feas_abs and gap <= settings.gap_tol * (1.0 + l1) * 10 and dual_inf <= 10 * settings.feas_tol
    ):
        # Scaling back can amplify the tiny LP residuals; refuse to overclaim.
        status = Status.NUMERIC_FAILURE if polished is None else status
    support = np.flatnonzero(x != 0.0) if polished is not None else np.flatnonzero(np.abs(xh) > 10 * settings.feas_tol)
    return SolveReport(x, y, status, res, gap, lp.iterations, support=support, polished=polished is not None,
                       message=lp.message)


# -- restricted least squares ---------------------------------------------------


def restricted_least_squares(A, I, B):
    """Minimize ``||A_I Xbar - B||_F`` over ``Xbar``.

    Solved with a QR factorization of ``A_I``.  When ``A_I`` is numerically
    rank deficient a minimum-norm minimizer is returned and a
    :class:`RankDeficientWarning` is emitted.

    Returns
    -------
    Xbar : ndarray, shape (|I|, r)
    residual : float
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    m, n = A.shape
    if B.shape[0] != m:
        raise ValueError(f"B has {B.shape[0]} rows, expected {m}")
    idx = as_support(I, n).array
    k = idx.size
    if k > m:
        raise ValueError(f"support size {k} exceeds the number of rows {m}")
    if k == 0:
        return np.zeros((0, B.shape[1])), float(np.linalg.norm(B))
    AI = A[:, idx]
    if numerical_rank(AI) < k:
        warnings.warn(f"A_I has numerical rank below {k}", RankDeficientWarning, stacklevel=2)
        Xbar = np.linalg.lstsq(AI, B, rcond=None)[0]
    else:
        Q, R = np.linalg.qr(AI)
        Xbar = sla.solve_triangular(R, Q.T @ B)
    residual = float(np.linalg.norm(AI @ Xbar - B))
    return Xbar, residual


# -- certificates ----------------------------------------------------------------


def check_smv_certificate(A, x, y, strict_tol: float = 1e-6, zero_tol: float = ZERO_TOL) -> Certificate:
    """Classify the pair ``(x, y)`` against the basis-pursuit optimality conditions.

    ``UNIQUE_OPTIMAL`` requires ``a_j'y = sign(x_j)`` on the support,
    ``|a_j'y| <= 1 - strict_tol`` off it and a full-column-rank ``A_support``;
    ``OPTIMAL`` only the non-strict inequality.  Feasibility ``Ax = b`` is
    the caller's responsibility.
    """
    A = as_matrix(A, "A")
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    m, n = A.shape
    if x.size != n or y.size != m:
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has {x.size}, y has {y.size}")
    g = A.T @ y
    on = np.abs(x) > zero_tol
    if np.any(np.abs(g[on] - np.sign(x[on])) > strict_tol):
        return Certificate.INVALID
    off = np.abs(g[~on])
    if np.any(off > 1.0 + strict_tol):
        return Certificate.INVALID
    if np.all(off <= 1.0 - strict_tol) and numerical_rank(A[:, on]) == int(on.sum()):
        return Certificate.UNIQUE_OPTIMAL
    return Certificate.OPTIMAL
