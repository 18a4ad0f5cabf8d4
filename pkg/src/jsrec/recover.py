"""Sequential single-vector recovery pipelines for ``B = A X0``.

Both pipelines repeatedly reduce the MMV problem to basis pursuit on one
combined measurement ``b = B w``.  A sufficiently sparse solution fixes a
candidate row support ``I``; the nonzero rows are then refit by least
squares and accepted only if ``A_I Xbar`` reproduces all of ``B``.

* :func:`boosted_l1` uses ``w = e_1, ..., e_r`` (each column once);
* :func:`rembo_l1` draws ``w`` at random for a fixed number of iterations.

An optional ``support_oracle`` replaces the basis-pursuit call.  It maps a
weight vector to the support basis pursuit would return, or ``None`` when
the solution is not sparse; :class:`FaceCountOracle` builds one from a
precomputed :class:`~jsrec.analysis.FaceCount`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .analysis import FaceCount
from .bpsolve import DEFAULT_SETTINGS, RankDeficientWarning, SolverSettings, restricted_least_squares, solve_bp
from .core import as_matrix

log = logging.getLogger(__name__)

#: Relative residual below which ``A_I Xbar = B`` is accepted as exact.
RES_TOL = 1e-8

SupportOracle = Callable[[np.ndarray], "np.ndarray | None"]


def support_threshold(A, override: int | None = None) -> int:
    """Largest support size accepted by the pipelines.

    Without `override` a support passes when ``2|I| < m + 1``, i.e. when it
    is below half the spark of a matrix in general position; the return
    value is therefore ``m // 2``.
    """
    if override is not None:
        if override < 0:
            raise ValueError("threshold override must be nonnegative")
        return int(override)
    m = A if isinstance(A, (int, np.integer)) else np.shape(A)[0]
    return int(m) // 2


@dataclass
class PipelineReport:
    """Outcome of a pipeline run.

    ``success_iteration`` is the 1-based iteration that produced the
    accepted support.  ``per_iteration`` holds ``(support_size,
    residual)`` for every iteration, with residual ``nan`` when the
    support test rejected the candidate or the solve failed.
    """

    recovered: bool
    X: np.ndarray | None
    support: np.ndarray | None
    iterations_used: int
    success_iteration: int | None = None
    weight_log: list | None = None
    per_iteration: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def decision(self) -> tuple:
        """``(recovered, success_iteration, support)`` for comparing runs."""
        supp = None if self.support is None else tuple(int(i) for i in self.support)
        return self.recovered, self.success_iteration, supp


def bp_support_oracle(A, B, settings: SolverSettings = DEFAULT_SETTINGS) -> SupportOracle:
    """Support of the basis-pursuit solution for ``b = B w`` (after polishing)."""

    def oracle(w):
        rep = solve_bp(A, B @ w, settings)
        if not rep.ok:
            raise RuntimeError(f"basis pursuit failed: {rep.status.value}")
        return rep.support

    return oracle


class FaceCountOracle:
    """Shortcut for experiments with known ``X0`` on a face-counted support.

    Basis pursuit on ``b = A X0 w`` returns ``X0 w`` exactly when the sign
    pattern of ``X0 w`` on the support survives; otherwise, for ``A`` in
    general position, its solution has more than ``m/2`` nonzeros and the
    support test rejects it.  Only the sign pattern is consulted.
    """

    def __init__(self, fc: FaceCount, X0):
        self.fc = fc
        self.X0 = np.asarray(X0, dtype=float)
        idx = fc.support.array
        off = np.ones(self.X0.shape[0], dtype=bool)
        off[idx] = False
        if np.any(self.X0[off] != 0):
            raise ValueError("X0 has nonzero rows outside the face-counted support")
        self._idx = idx

    def __call__(self, w):
        x = self.X0 @ w
        if np.any(x[self._idx] == 0):
            return None
        return self._idx if self.fc.lookup_signs(x) else None


def _run(A, B, weights: Iterable, settings, threshold, res_tol, oracle, keep_weights) -> PipelineReport:
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    thr = support_threshold(A, threshold)
    oracle = oracle or bp_support_oracle(A, B, settings)
    Bnorm = float(np.linalg.norm(B))
    report = PipelineReport(False, None, None, 0, weight_log=[] if keep_weights else None)
    for it, w in enumerate(weights, start=1):
        w = np.asarray(w, dtype=float)
        report.iterations_used = it
        if keep_weights:
            report.weight_log.append(w.copy())
        try:
            supp = oracle(w)
        except Exception as exc:  # a failed solve only costs this iteration
            log.debug("iteration %d: %s", it, exc)
            report.errors.append((it, str(exc)))
            report.per_iteration.append((-1, np.nan))
            continue
        if supp is None or len(supp) > thr:
            report.per_iteration.append((-1 if supp is None else len(supp), np.nan))
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            Xbar, res = restricted_least_squares(A, np.asarray(supp), B)
        report.per_iteration.append((len(supp), res))
        if res <= res_tol * (1.0 + Bnorm):
            X = np.zeros((A.shape[1], B.shape[1]))
            X[np.asarray(supp, dtype=np.intp)] = Xbar
            assert np.linalg.norm(A @ X - B) <= res_tol * (1.0 + Bnorm) * (1 + 1e-12)
            report.recovered = True
            report.X = X
            report.support = np.asarray(supp, dtype=np.intp)
            report.success_iteration = it
            return report
    return report


def boosted_l1(A, B, settings: SolverSettings = DEFAULT_SETTINGS, threshold: int | None = None,
               res_tol: float = RES_TOL, support_oracle: SupportOracle | None = None,
               keep_weights: bool = False) -> PipelineReport:
    """Try basis pursuit on each column of `B` in order until one support explains all of `B`."""
    r = as_matrix(B, "B").shape[1]
    return _run(A, B, np.eye(r), settings, threshold, res_tol, support_oracle, keep_weights)


def rembo_l1(A, B, max_iterations: int, rng: np.random.Generator | None = None,
             settings: SolverSettings = DEFAULT_SETTINGS, threshold: int | None = None,
             res_tol: float = RES_TOL, weights: Iterable | None = None,
             support_oracle: SupportOracle | None = None, keep_weights: bool = False) -> PipelineReport:
    """ReMBo with basis pursuit: random combinations ``b = B w`` until a support is confirmed.

    Parameters
    ----------
    max_iterations : int
        Number of weight vectors tried before reporting failure.
    rng : numpy.random.Generator
        Source of the standard normal weights (length ``r``).  Weight ``t``
        is the ``t``-th draw, so a larger budget only appends iterations.
    weights : iterable of arrays, optional
        Explicit weight sequence used instead of `rng`; at most
        `max_iterations` are consumed.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    r = as_matrix(B, "B").shape[1]
    if weights is None:
        if rng is None:
            raise ValueError("either rng or weights is required")
        seq = (rng.standard_normal(r) for _ in range(max_iterations))
    else:
        seq = (w for _, w in zip(range(max_iterations), weights))
    return _run(A, B, seq, settings, threshold, res_tol, support_oracle, keep_weights)
