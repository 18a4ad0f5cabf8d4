"""Orthant counts and sign-pattern sampling for random combinations ``Xbar @ w``.

``cnd(n, d)`` is the largest number of orthants of R^n whose interiors a
``d``-dimensional subspace can meet.  ReMBo only ever sees the sign
patterns of ``Xbar @ w``, so ``cnd(s, r) / 2`` bounds the number of
distinct pattern pairs it can try for an ``s x r`` coefficient block.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ZERO_TOL, SignPattern, as_matrix
from .errors import DegenerateRow

#: Sign patterns are encoded in int64 bit masks.
MAX_PATTERN_LENGTH = 62


def cnd(n: int, d: int) -> int:
    """Maximum number of orthants of R^n properly intersected by a d-dimensional subspace.

    ``C(n, d) = 2 * sum_{i<d} binom(n-1, i)``; equals ``2**n`` once ``d >= n``.

    >>> cnd(10, 5)
    512
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ValueError("cnd requires n >= 1 and d >= 1")
    if d >= n:
        return 2**n
    return 2 * sum(math.comb(n - 1, i) for i in range(d))


def pattern_string(code: int, length: int) -> str:
    return "".join("-" if (code >> k) & 1 else "+" for k in range(length))


def _log_checkpoints(trials: int, count: int = 200) -> np.ndarray:
    if trials < 1:
        return np.zeros(0, dtype=np.int64)
    pts = np.unique(np.round(np.logspace(0, np.log10(trials), count)).astype(np.int64))
    return pts[(pts >= 1) & (pts <= trials)]


@dataclass
class PatternStats:
    """Sign-pattern pairs reached by ``Xbar @ w`` over a run of accepted draws.

    Patterns are stored by code (bit ``k`` set when entry ``k`` is negative,
    canonical so bit 0 is clear).  ``first_seen`` holds 0-based indices of
    accepted draws.
    """

    length: int
    trials: int = 0
    first_seen: dict = field(default_factory=dict)
    frequency: dict = field(default_factory=dict)
    discarded: int = 0

    @property
    def unique_pairs(self) -> int:
        return len(self.frequency)

    def unique_after(self, t) -> np.ndarray:
        """Number of distinct pairs seen within the first `t` accepted draws."""
        seen = np.sort(np.fromiter(self.first_seen.values(), dtype=np.int64, count=len(self.first_seen)))
        return np.searchsorted(seen, np.asarray(t) - 1, side="right")

    @property
    def new_per_iteration(self) -> list[tuple[int, int]]:
        """``(trial, unique_pairs)`` at logarithmically spaced checkpoints."""
        pts = _log_checkpoints(self.trials)
        return list(zip(pts.tolist(), self.unique_after(pts).tolist()))

    def patterns(self) -> list[SignPattern]:
        support = range(self.length)
        return [SignPattern.from_code(c, support) for c in sorted(self.first_seen, key=self.first_seen.get)]

    def merge(self, other: "PatternStats", offset: int | None = None) -> "PatternStats":
        """Combine with statistics from a later block of draws.

        `offset` is added to ``other.first_seen`` and defaults to
        ``self.trials``, so merging consecutive blocks reproduces a single
        run.  Counts add; first appearances take the minimum.
        """
        if other.length != self.length:
            raise ValueError("cannot merge statistics for different pattern lengths")
        off = self.trials if offset is None else int(offset)
        out = PatternStats(self.length, self.trials + other.trials, dict(self.first_seen), dict(self.frequency),
                           self.discarded + other.discarded)
        for code, cnt in other.frequency.items():
            out.frequency[code] = out.frequency.get(code, 0) + cnt
            t = other.first_seen[code] + off
            out.first_seen[code] = min(out.first_seen.get(code, t), t)
        return out

    def write_csv(self, path) -> None:
        """Write ``pattern,count,first_seen`` rows ordered by first appearance."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pattern", "count", "first_seen"])
            for code in sorted(self.first_seen, key=self.first_seen.get):
                w.writerow([pattern_string(code, self.length), self.frequency[code], self.first_seen[code]])


def _check_xbar(Xbar) -> np.ndarray:
    Xbar = as_matrix(Xbar, "Xbar")
    if Xbar.shape[0] > MAX_PATTERN_LENGTH:
        raise ValueError(f"at most {MAX_PATTERN_LENGTH} rows supported")
    zero = np.flatnonzero(~np.any(Xbar != 0.0, axis=1))
    if zero.size:
        raise DegenerateRow(f"row {zero[0]} of Xbar is zero")
    return Xbar


def canonical_codes(V: np.ndarray) -> np.ndarray:
    neg = V < 0
    neg ^= neg[:, :1]
    weights = np.left_shift(np.int64(1), np.arange(V.shape[1], dtype=np.int64))
    return neg.astype(np.int64) @ weights


def sample_sign_patterns(Xbar, trials: int, rng: np.random.Generator, zero_tol: float = ZERO_TOL,
                         chunk: int = 1 << 16) -> PatternStats:
    """Record canonical sign patterns of ``Xbar @ w`` for standard normal `w`.

    Draws with an entry of magnitude ``<= zero_tol`` are discarded and do
    not count toward `trials`; sampling continues until `trials` draws
    have been accepted.
    """
    Xbar = _check_xbar(Xbar)
    s, r = Xbar.shape
    if trials < 1:
        raise ValueError("trials must be positive")
    stats = PatternStats(s)
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        W = rng.standard_normal((k, r))
        V = W @ Xbar.T
        good = np.all(np.abs(V) > zero_tol, axis=1)
        stats.discarded += int(k - good.sum())
        codes = canonical_codes(V[good])
        uniq, first, counts = np.unique(codes, return_index=True, return_counts=True)
        for c, f, n in zip(uniq.tolist(), first.tolist(), counts.tolist()):
            if c in stats.frequency:
                stats.frequency[c] += n
            else:
                stats.frequency[c] = n
                stats.first_seen[c] = done + f
        done += codes.size
    stats.trials = done
    return stats


def estimate_pattern_probability(Xbar, pattern: SignPattern, trials: int, rng: np.random.Generator,
                                 zero_tol: float = ZERO_TOL) -> tuple[float, float]:
    """Monte-Carlo probability that a standard normal `w` gives ``sign(Xbar @ w) = +-pattern``.

    This is the spherical measure of the intersection of open halfspaces
    ``{w : pattern_j * Xbar_j w > 0}``.  Returns the estimate and its
    binomial standard error.
    """
    Xbar = _check_xbar(Xbar)
    if len(pattern) != Xbar.shape[0]:
        raise ValueError(f"pattern has length {len(pattern)}, Xbar has {Xbar.shape[0]} rows")
    stats = sample_sign_patterns(Xbar, trials, rng, zero_tol)
    p = stats.frequency.get(pattern.code, 0) / stats.trials
    return p, math.sqrt(p * (1.0 - p) / stats.trials)


def mutual_coherence(X, variant: str = "min") -> float:
    """Extremal normalized absolute inner product between distinct columns.

    ``variant="min"`` takes the minimum over column pairs (the definition
    used in the ReMBo sampling discussion); ``"max"`` the usual maximum.
    """
    X = as_matrix(X, "X")
    if X.shape[1] < 2:
        raise ValueError("need at least two columns")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise ValueError("X has a zero column")
    G = np.abs((X / norms).T @ (X / norms))
    vals = G[np.triu_indices(X.shape[1], k=1)]
    if variant == "min":
        return float(vals.min())
    if variant == "max":
        return float(vals.max())
    raise ValueError(f"unknown variant {variant!r}")


def clustered_columns(rows: int, cols: int, spread: float, rng: np.random.Generator) -> np.ndarray:
    """One random column repeated `cols` times plus ``spread``-scaled noise, unit-norm columns."""
    base = rng.standard_normal((rows, 1))
    X = base + spread * rng.standard_normal((rows, cols))
    return X / np.linalg.norm(X, axis=0)


def mean_pairwise_angle(X) -> float:
    """Average angle in degrees between distinct columns of `X`."""
    X = as_matrix(X, "X")
    U = X / np.linalg.norm(X, axis=0)
    C = np.clip(U.T @ U, -1.0, 1.0)
    iu = np.triu_indices(X.shape[1], k=1)
    return float(np.degrees(np.arccos(np.abs(C[iu]))).mean())
