"""Recovery theory for a fixed matrix and support.

Face counts enumerate every sign pattern on a support and record whether
basis pursuit recovers it; by the face-mapping argument that ratio is the
l1 recovery probability for random signals on the support.  The
null-space check decides uniform recovery directly from ``kernel(A)``.
The ``prob_*`` functions turn a face count into recovery-rate models for
the multiple-measurement algorithms.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .bpsolve import DEFAULT_SETTINGS, SolverSettings, Status, solve_lp, solve_bp
from .combinatorics import cnd, pattern_string
from .core import SignPattern, SupportSet, as_matrix, as_support, is_recovered, numerical_rank
from .errors import BudgetExceeded, SolverError

#: Largest support for which all sign patterns are enumerated.
MAX_ENUMERATION = 22


@dataclass
class FaceCount:
    """Recovered/unrecovered flag for every canonical sign pattern on a support.

    ``table[code >> 1]`` is the flag for the canonical pattern with bit
    mask ``code`` (bit 0, the leading sign, is always clear).  Counts are
    reported over all ``2**|I|`` patterns, i.e. a pattern and its negation
    both count.
    """

    support: SupportSet
    table: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return 2 ** len(self.support)

    @property
    def surviving(self) -> int:
        return 2 * int(np.count_nonzero(self.table))

    @property
    def per_pattern(self) -> dict:
        return {SignPattern.from_code(2 * i, self.support.indices): bool(v) for i, v in enumerate(self.table)}

    def recovered(self, pattern: SignPattern) -> bool:
        return bool(self.table[pattern.code >> 1])

    def lookup_signs(self, x) -> bool:
        """Whether the sign pattern of `x` on the support is marked recovered."""
        v = np.asarray(x, dtype=float)[self.support.array]
        neg = v < 0
        if neg[0]:
            neg = ~neg
        code = int(np.dot(neg, 1 << np.arange(neg.size, dtype=np.int64)))
        return bool(self.table[code >> 1])

    def write_csv(self, path) -> None:
        k = len(self.support)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pattern", "recovered"])
            for i, v in enumerate(self.table):
                w.writerow([pattern_string(2 * i, k), int(bool(v))])


def _pattern_vector(code: int, k: int) -> np.ndarray:
    return np.where((code >> np.arange(k)) & 1, -1.0, 1.0)


def _face_chunk(args):
    A, idx, codes, magnitudes, settings = args
    n = A.shape[1]
    k = idx.size
    out = []
    for code in codes:
        x0 = np.zeros(n)
        x0[idx] = _pattern_vector(code, k) * magnitudes
        rep = solve_bp(A, A @ x0, settings)
        out.append(is_recovered(rep.x, x0, settings.recovery_tol))
    return out


def face_count(A, I, settings: SolverSettings = DEFAULT_SETTINGS, magnitudes=None, threads: int = 1) -> FaceCount:
    """Solve basis pursuit for every canonical sign pattern on `I`.

    Each pattern is represented by ``x0 = pattern * magnitudes`` on `I`
    (unit magnitudes by default) and counted as recovered when the solution
    is within ``settings.recovery_tol`` of ``x0`` in the max norm.

    Raises
    ------
    BudgetExceeded
        If ``|I|`` exceeds :data:`MAX_ENUMERATION`.
    """
    A = as_matrix(A, "A")
    I = as_support(I, A.shape[1])
    k = len(I)
    if k == 0:
        raise ValueError("support must be nonempty")
    if k > MAX_ENUMERATION:
        raise BudgetExceeded(f"|I|={k} exceeds the enumeration limit {MAX_ENUMERATION}")
    mags = np.ones(k) if magnitudes is None else np.abs(np.asarray(magnitudes, dtype=float))
    codes = [2 * i for i in range(2 ** (k - 1))]
    idx = I.array
    if threads > 1 and len(codes) > 1:
        parts = [codes[j::threads] for j in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_face_chunk, [(A, idx, p, mags, settings) for p in parts]))
        flags = np.zeros(len(codes), dtype=bool)
        for j, res in enumerate(results):
            flags[j::threads] = res
    else:
        flags = np.array(_face_chunk((A, idx, codes, mags, settings)), dtype=bool)
    return FaceCount(I, flags)


@dataclass
class NSPResult:
    """Outcome of :func:`check_nsp_uniform`.

    ``value`` is ``max ||z_I||_1`` over kernel vectors with
    ``||z_{I^c}||_1 <= 1`` (``inf`` when ``A_I`` is rank deficient).
    """

    holds: bool
    value: float
    witness: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.holds


def check_nsp_uniform(A, I, tol: float = 1e-7, settings: SolverSettings = DEFAULT_SETTINGS) -> NSPResult:
    """Decide whether every kernel vector has less l1 mass on `I` than off it.

    For each canonical sign vector ``sigma`` on `I` the LP

        max 1'w  s.t.  A_I diag(sigma) w + A_{I^c} (u - v) = 0,
                       1'u + 1'v <= 1,   w, u, v >= 0

    is solved; the largest optimum over ``sigma`` is ``max ||z_I||_1``.
    The property is reported to fail when that value is ``>= 1 - tol``,
    with the maximizing kernel vector as witness.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    I = as_support(I, n)
    k = len(I)
    if k > MAX_ENUMERATION:
        raise BudgetExceeded(f"|I|={k} exceeds the enumeration limit {MAX_ENUMERATION}")
    if numerical_rank(A) == n or k == 0:
        return NSPResult(True, 0.0)
    idx, cidx = I.array, I.complement()
    AI, Ac = A[:, idx], A[:, cidx]
    if numerical_rank(AI) < k:
        _, _, Vt = np.linalg.svd(AI)
        z = np.zeros(n)
        z[idx] = Vt[-1]
        return NSPResult(False, math.inf, z)
    if cidx.size == 0:
        return NSPResult(True, 0.0)

    nc = cidx.size
    best, best_z = -math.inf, None
    for code in range(0, 2**k, 2):
        sigma = _pattern_vector(code, k)
        Aeq = np.zeros((m + 1, k + 2 * nc + 1))
        Aeq[:m, :k] = AI * sigma
        Aeq[:m, k:k + nc] = Ac
        Aeq[:m, k + nc:k + 2 * nc] = -Ac
        Aeq[m, k:] = 1.0
        beq = np.zeros(m + 1)
        beq[m] = 1.0
        c = np.zeros(k + 2 * nc + 1)
        c[:k] = -1.0
        lp = solve_lp(c, Aeq, beq, settings=settings)
        if lp.status is not Status.OPTIMAL:
            raise SolverError(f"null-space LP for pattern {pattern_string(code, k)}: {lp.status.value}", lp.status)
        val = -lp.objective
        if val > best:
            z = np.zeros(n)
            z[idx] = sigma * lp.x[:k]
            z[cidx] = lp.x[k:k + nc] - lp.x[k + nc:k + 2 * nc]
            best, best_z = val, z
    if best >= 1.0 - tol:
        return NSPResult(False, best, best_z)
    return NSPResult(True, best)


@dataclass(frozen=True)
class SparkResult:
    """``kind`` is ``"value"`` (exact), ``"at_least"`` (budget hit) or ``"trivial"`` (kernel is {0})."""

    kind: str
    value: int | None = None


def spark_bruteforce(A, budget: int = 1_000_000) -> SparkResult:
    """Smallest number of linearly dependent columns, by subset search.

    Subsets are examined in order of increasing size; at most `budget`
    rank computations are performed.
    """
    A = as_matrix(A, "A")
    n = A.shape[1]
    rank = numerical_rank(A)
    if rank == n:
        return SparkResult("trivial")
    checked = 0
    for k in range(1, rank + 2):
        for cols in combinations(range(n), k):
            if checked >= budget:
                return SparkResult("at_least", k)
            checked += 1
            if numerical_rank(A[:, cols]) < k:
                return SparkResult("value", k)
    # a set of rank+1 columns is always dependent
    raise AssertionError("unreachable")


def prob_l1(fc: FaceCount) -> float:
    """Fraction of sign patterns on the support that survive."""
    return fc.surviving / fc.total


def prob_l11(p: float, r: int) -> float:
    """Column-wise l1 recovers all `r` columns: ``p**r``."""
    return float(p) ** int(r)


def prob_boosted(p: float, r: int) -> float:
    """At least one of `r` independent columns is recovered: ``1 - (1-p)**r``."""
    return 1.0 - (1.0 - float(p)) ** int(r)


def prob_rembo(surviving: int, total: int, s: int, r: int, pairs: int | None = None) -> float:
    """ReMBo model: sample pattern pairs without replacement until one survives.

    Up to ``cnd(s, r) // 2`` distinct pairs (or `pairs`, when the number
    actually reached is known) are tried; the ``i``-th try succeeds with
    probability ``surviving / (total - 2(i-1))``.  Once that denominator
    no longer exceeds `surviving` every untried pattern survives and the
    model returns 1.
    """
    surviving, total = int(surviving), int(total)
    if not 0 <= surviving <= total:
        raise ValueError("need 0 <= surviving <= total")
    if surviving == 0:
        return 0.0
    K = cnd(s, r) // 2 if pairs is None else int(pairs)
    if K <= 0:
        return 0.0
    # first i with total - 2(i-1) <= surviving
    i_stop = -(-(total - surviving) // 2) + 1
    if K >= i_stop:
        return 1.0
    i = np.arange(1, K + 1, dtype=np.float64)
    frac = surviving / (total - 2.0 * (i - 1.0))
    logfail = np.sum(np.log1p(-np.clip(frac, 0.0, 1.0)))
    return float(-np.expm1(logfail))
