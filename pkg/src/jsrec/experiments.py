"""Seeded Monte-Carlo experiments driven by a JSON configuration.

A configuration fixes one Gaussian matrix per seed and a grid of
``(s, r)`` cells.  Every trial draws from its own counter-based stream
keyed by ``(seed, cell, trial)``, so results do not depend on how trials
are scheduled across worker processes.  :func:`run_experiment` returns the
aggregated rows and, when an output directory is configured, writes
``results.csv``, ``config.echo.json`` and ``plot.svg`` there.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations
from pathlib import Path

import numpy as np

from .analysis import MAX_ENUMERATION, FaceCount, face_count, prob_boosted, prob_l1, prob_l11, prob_rembo
from .bpsolve import SolverSettings, Status, solve_bp
from .combinatorics import canonical_codes, cnd, sample_sign_patterns
from .core import (as_matrix, as_support, format_float, gaussian_matrix, is_recovered, make_rng,
                   random_support, row_sparse_matrix)
from .errors import ConfigError, NumericFailureRate
from .mmv import solve_l11, solve_l12
from .plotting import emit_plot
from .recover import FaceCountOracle, boosted_l1, rembo_l1

SCHEMA_VERSION = 1
KINDS = ("smv_sweep", "l11_vs_l12", "boosted", "rembo", "triangles", "pattern_sampling", "cnd_table")
#: Largest tolerated fraction of solver calls ending in numeric failure.
MAX_FAILURE_RATE = 0.01
Z95 = 1.959963984540054

# stream tags keep the matrix, supports and trials on disjoint RNG streams
_MATRIX, _SUPPORT, _TRIAL, _VECTORS = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    Only ``kind`` is required in the JSON form besides ``schema_version``.
    ``tolerances`` holds :class:`~jsrec.bpsolve.SolverSettings` overrides.
    ``use_face_cache`` lets the pipelines read recovery outcomes from an
    exhaustive face count instead of calling basis pursuit.
    """

    kind: str
    m: int = 20
    n: int = 80
    r_values: list = field(default_factory=lambda: [1])
    s_values: list = field(default_factory=lambda: [1])
    trials: int = 200
    seed: int = 0
    max_iterations: int = 10
    output_dir: str | None = None
    tolerances: dict = field(default_factory=dict)
    use_face_cache: bool = True
    grid_density: int = 10
    n_max: int = 12
    d_max: int = 12
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need_int(name, lo=None):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
            if lo is not None and v < lo:
                raise ConfigError(f"{name} must be >= {lo}")

        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version!r}; expected {SCHEMA_VERSION}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        for name in ("m", "n", "trials", "max_iterations", "n_max", "d_max"):
            need_int(name, 1)
        need_int("grid_density", 2)
        need_int("seed", 0)
        if self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 bits")
        for name, lo, hi in (("s_values", 1, self.n), ("r_values", 1, None)):
            vals = getattr(self, name)
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{name} must be a nonempty list")
            for v in vals:
                if isinstance(v, bool) or not isinstance(v, int) or v < lo or (hi is not None and v > hi):
                    raise ConfigError(f"{name} entries must be integers in [{lo}, {hi or 'inf'}], got {v!r}")
        if not isinstance(self.use_face_cache, bool):
            raise ConfigError("use_face_cache must be true or false")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")
        known = {f.name for f in dataclasses.fields(SolverSettings)}
        bad = sorted(set(self.tolerances) - known)
        if bad:
            raise ConfigError(f"unknown tolerance keys: {', '.join(bad)}")
        try:
            self.settings()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid tolerances: {exc}") from None
        if self.kind in ("boosted", "rembo", "triangles") and max(self.s_values) > MAX_ENUMERATION:
            raise ConfigError(f"face counts need s <= {MAX_ENUMERATION}")
        if self.kind == "pattern_sampling" and self.s_values[0] > 62:
            raise ConfigError("pattern sampling supports at most 62 rows")

    def settings(self) -> SolverSettings:
        return SolverSettings(**self.tolerances)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        if "schema_version" not in data:
            raise ConfigError("missing schema_version")
        if "kind" not in data:
            raise ConfigError("missing kind")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        return cls.from_dict(data)


def ci_halfwidth(rate: float, trials: int) -> float:
    """95% normal-approximation half-width of a binomial proportion."""
    return Z95 * math.sqrt(rate * (1.0 - rate) / trials)


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


def thread_count() -> int:
    """Worker processes allowed by ``JSREC_THREADS`` (default 1)."""
    raw = os.environ.get("JSREC_THREADS", "1")
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"JSREC_THREADS must be an integer, got {raw!r}") from None
    return max(1, v)


def _map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# -- per-trial workers (module level so they pickle) ---------------------------------

def _smv_trial(ctx, t):
    A, seed, s, settings = ctx
    rng = make_rng(seed, _TRIAL, s, 1, t)
    I = random_support(A.shape[1], s, rng)
    x0 = row_sparse_matrix(I, 1, rng)[:, 0]
    rep = solve_bp(A, A @ x0, settings)
    return {"l1": is_recovered(rep.x, x0, settings.recovery_tol)}, int(rep.status is Status.NUMERIC_FAILURE), 1


def _l11_l12_trial(ctx, t):
    A, seed, s, r, settings = ctx
    rng = make_rng(seed, _TRIAL, s, r, t)
    I = random_support(A.shape[1], s, rng)
    X0 = row_sparse_matrix(I, r, rng)
    B = A @ X0
    r11 = solve_l11(A, B, settings)
    r12 = solve_l12(A, B, settings)
    fails = int(r11.status is Status.NUMERIC_FAILURE) + int(r12.status is Status.NUMERIC_FAILURE)
    return ({"l11": is_recovered(r11.X, X0, settings.recovery_tol),
             "l12": is_recovered(r12.X, X0, settings.recovery_tol)}, fails, r + 1)


def _boosted_trial(ctx, t):
    A, seed, fc, r, settings, cached = ctx
    s = len(fc.support)
    rng = make_rng(seed, _TRIAL, s, r, t)
    X0 = row_sparse_matrix(fc.support, r, rng)
    B = A @ X0
    if cached:
        rep = boosted_l1(A, B, settings, support_oracle=FaceCountOracle(fc, X0))
        l11 = all(fc.lookup_signs(X0[:, k]) for k in range(r))
        fails, calls = 0, 1
    else:
        rep = boosted_l1(A, B, settings)
        r11 = solve_l11(A, B, settings)
        l11 = is_recovered(r11.X, X0, settings.recovery_tol)
        fails = len(rep.errors) + len(r11.failed_columns)
        calls = rep.iterations_used + r
    return {"boosted": rep.recovered, "l11": l11}, fails, calls


def _rembo_trial(ctx, t):
    A, seed, fc, r, settings, cached, max_it = ctx
    s = len(fc.support)
    rng = make_rng(seed, _TRIAL, s, r, t)
    X0 = row_sparse_matrix(fc.support, r, rng)
    W = rng.standard_normal((max_it, r))
    oracle = FaceCountOracle(fc, X0) if cached else None
    rep = rembo_l1(A, A @ X0, max_it, settings=settings, weights=W, support_oracle=oracle)
    V = W @ X0[fc.support.array].T
    pairs = np.unique(canonical_codes(V[np.all(V != 0, axis=1)])).size
    model = prob_rembo(fc.surviving, fc.total, s, r, pairs=pairs)
    return {"rembo": rep.recovered, "model": model}, len(rep.errors), rep.iterations_used


# -- aggregation ----------------------------------------------------------------

RATE_COLUMNS = ["method", "s", "r", "trials", "recovered", "empirical_rate", "ci_halfwidth",
                "model_rate", "model_sigma", "p_l1"]


def _rate_row(method, s, r, hits, trials, model=None, p=None):
    rate = hits / trials
    return {"method": method, "s": s, "r": r, "trials": trials, "recovered": hits,
            "empirical_rate": rate, "ci_halfwidth": ci_halfwidth(rate, trials),
            "model_rate": model, "model_sigma": None if model is None else binomial_sigma(model, trials),
            "p_l1": p}


class _Tally:
    def __init__(self):
        self.fails = 0
        self.calls = 0

    def add(self, outcomes):
        for _, f, c in outcomes:
            self.fails += f
            self.calls += c
        return [o for o, _, _ in outcomes]

    @property
    def rate(self):
        return self.fails / self.calls if self.calls else 0.0


def experiment_matrix(config: ExperimentConfig) -> np.ndarray:
    """The fixed Gaussian matrix of an experiment."""
    return gaussian_matrix(config.m, config.n, make_rng(config.seed, _MATRIX))


def fixed_support(config: ExperimentConfig, s: int):
    return random_support(config.n, s, make_rng(config.seed, _SUPPORT, s))


def _run_smv(cfg, A, settings, threads, tally):
    rows = []
    for s in cfg.s_values:
        out = tally.add(_map(partial(_smv_trial, (A, cfg.seed, s, settings)), range(cfg.trials), threads))
        rows.append(_rate_row("l1", s, 1, sum(o["l1"] for o in out), cfg.trials))
    return rows


def _run_l11_l12(cfg, A, settings, threads, tally):
    rows = []
    for r in cfg.r_values:
        for s in cfg.s_values:
            ctx = (A, cfg.seed, s, r, settings)
            out = tally.add(_map(partial(_l11_l12_trial, ctx), range(cfg.trials), threads))
            for method in ("l11", "l12"):
                rows.append(_rate_row(method, s, r, sum(o[method] for o in out), cfg.trials))
    return rows


def _face_counts(cfg, A, settings, threads):
    return {s: face_count(A, fixed_support(cfg, s), settings, threads=threads) for s in cfg.s_values}


def _run_boosted(cfg, A, settings, threads, tally):
    rows = []
    for s, fc in _face_counts(cfg, A, settings, threads).items():
        p = prob_l1(fc)
        for r in cfg.r_values:
            ctx = (A, cfg.seed, fc, r, settings, cfg.use_face_cache)
            out = tally.add(_map(partial(_boosted_trial, ctx), range(cfg.trials), threads))
            rows.append(_rate_row("boosted", s, r, sum(o["boosted"] for o in out), cfg.trials, prob_boosted(p, r), p))
            rows.append(_rate_row("l11", s, r, sum(o["l11"] for o in out), cfg.trials, prob_l11(p, r), p))
    return rows


def _run_rembo(cfg, A, settings, threads, tally):
    rows = []
    for s, fc in _face_counts(cfg, A, settings, threads).items():
        p = prob_l1(fc)
        for r in cfg.r_values:
            ctx = (A, cfg.seed, fc, r, settings, cfg.use_face_cache, cfg.max_iterations)
            out = tally.add(_map(partial(_rembo_trial, ctx), range(cfg.trials), threads))
            model = float(np.mean([o["model"] for o in out]))
            rows.append(_rate_row("rembo", s, r, sum(o["rembo"] for o in out), cfg.trials, model, p))
    return rows


def _run_cnd(cfg):
    return [{"n": n, "d": d, "cnd": cnd(n, d)} for n in range(1, cfg.n_max + 1) for d in range(1, cfg.d_max + 1)]


def _run_sampling(cfg):
    s, r = cfg.s_values[0], cfg.r_values[0]
    Xbar = make_rng(cfg.seed, _VECTORS).standard_normal((s, r))
    stats = sample_sign_patterns(Xbar, cfg.trials, make_rng(cfg.seed, _TRIAL))
    bound = cnd(s, r) // 2
    rows = [{"trial": t, "unique_pairs": u, "bound": bound} for t, u in stats.new_per_iteration]
    return rows, stats


# -- triangles ------------------------------------------------------------------

def barycentric_grid(density: int) -> list[tuple[float, float, float]]:
    """Points ``(i, j, k) / density`` with ``i + j + k = density``."""
    if density < 2:
        raise ValueError("grid density must be at least 2")
    return [(i / density, j / density, (density - i - j) / density)
            for i in range(density, -1, -1) for j in range(density - i, -1, -1)]


def survivor_vectors(A, I, fc: FaceCount, count: int, rng: np.random.Generator, recovered: bool,
                     settings: SolverSettings = SolverSettings()) -> list[np.ndarray]:
    """Random-magnitude vectors on `I` whose sign patterns are (not) recovered by basis pursuit.

    Each candidate is confirmed by an actual solve.  Returns fewer than
    `count` vectors only when the face count has fewer such patterns.
    """
    A = as_matrix(A, "A")
    idx = fc.support.array
    codes = np.flatnonzero(fc.table == recovered)
    rng.shuffle(codes)
    out = []
    for i in codes:
        if len(out) == count:
            break
        signs = np.where((int(2 * i) >> np.arange(idx.size)) & 1, -1.0, 1.0)
        x = np.zeros(A.shape[1])
        x[idx] = signs * (0.5 + rng.random(idx.size))
        rep = solve_bp(A, A @ x, settings)
        if is_recovered(rep.x, x, settings.recovery_tol) == recovered:
            out.append(x)
    return out


def run_triangles(A, I, s_vectors, f_vectors, grid_density: int, methods=("l11", "l12"),
                  settings: SolverSettings = SolverSettings()) -> list[dict]:
    """Recovery of ``B = A X0 W`` over the weight simplex for every triangle of vectors.

    The labelled vectors ``s1, s2, ..., f1, f2, ...`` are combined three at
    a time into ``X0`` (triangle names join the labels with ``/``); at each grid point ``W = diag(w1, w2, w3)`` and the
    row-sparse solution is compared with ``X0 W``.
    """
    A = as_matrix(A, "A")
    I = as_support(I, A.shape[1])
    labelled = [(f"s{k + 1}", v) for k, v in enumerate(s_vectors)] + [(f"f{k + 1}", v) for k, v in enumerate(f_vectors)]
    cols = []
    off = I.complement()
    for lbl, v in labelled:
        v = np.asarray(v, dtype=float)
        if v.shape == (len(I),):
            full = np.zeros(A.shape[1])
            full[I.array] = v
            v = full
        if v.shape != (A.shape[1],) or np.any(v[off] != 0):
            raise ValueError(f"vector {lbl} is not supported on I")
        cols.append((lbl, v))
    if len(cols) < 3:
        raise ValueError("need at least three vectors")
    solvers = {"l11": solve_l11, "l12": solve_l12}
    rows = []
    for tri in combinations(cols, 3):
        name = "/".join(lbl for lbl, _ in tri)
        X0 = np.column_stack([v for _, v in tri])
        for w in barycentric_grid(grid_density):
            target = X0 * np.asarray(w)
            B = A @ target
            row = {"triangle": name, "w1": w[0], "w2": w[1], "w3": w[2]}
            for meth in methods:
                rep = solvers[meth](A, B, settings)
                row[meth] = int(is_recovered(rep.X, target, settings.recovery_tol))
            rows.append(row)
    return rows


def _run_triangles_kind(cfg, A, settings, threads):
    s = cfg.s_values[0]
    fc = face_count(A, fixed_support(cfg, s), settings, threads=threads)
    rng = make_rng(cfg.seed, _VECTORS)
    svec = survivor_vectors(A, fc.support, fc, 3, rng, True, settings)
    fvec = survivor_vectors(A, fc.support, fc, 2, rng, False, settings)
    if len(svec) < 3 or len(fvec) < 2:
        raise ConfigError(f"support size {s} needs three recovered and two unrecovered sign patterns")
    return run_triangles(A, fc.support, svec, fvec, cfg.grid_density, settings=settings)


# -- output ---------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_rows(path, rows: list[dict], columns: list[str] | None = None) -> None:
    """CSV with a header, LF endings and 17 significant digits."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def _plot(cfg, rows, path):
    kind = cfg.kind
    series, dashed = [], []
    if kind in ("smv_sweep", "l11_vs_l12"):
        for key in dict.fromkeys((r["method"], r["r"]) for r in rows):
            sel = [r for r in rows if (r["method"], r["r"]) == key]
            series.append((f"{key[0]} r={key[1]}", [r["s"] for r in sel], [r["empirical_rate"] for r in sel]))
        emit_plot(series, path, f"Recovery rate ({kind})", "row sparsity s", "recovery rate")
    elif kind in ("boosted", "rembo"):
        for key in dict.fromkeys((r["method"], r["s"]) for r in rows):
            sel = [r for r in rows if (r["method"], r["s"]) == key]
            xs = [r["r"] for r in sel]
            series.append((f"{key[0]} s={key[1]}", xs, [r["empirical_rate"] for r in sel]))
            lbl = f"model {key[0]} s={key[1]}"
            series.append((lbl, xs, [r["model_rate"] for r in sel]))
            dashed.append(lbl)
        emit_plot(series, path, f"Empirical (solid) and model (dashed): {kind}", "number of columns r",
                  "recovery rate", dashed)
    elif kind == "cnd_table":
        for d in range(1, cfg.d_max + 1):
            sel = [r for r in rows if r["d"] == d]
            series.append((f"d={d}", [r["n"] for r in sel], [math.log2(r["cnd"]) for r in sel]))
        emit_plot(series, path, "Orthant counts", "n", "log2 C(n,d)")
    elif kind == "pattern_sampling":
        xs = [math.log10(r["trial"]) for r in rows]
        series = [("unique pairs", xs, [r["unique_pairs"] for r in rows]),
                  ("C(s,r)/2", xs, [r["bound"] for r in rows])]
        emit_plot(series, path, "Distinct sign-pattern pairs", "log10 trials", "pairs", ["C(s,r)/2"])
    elif kind == "triangles":
        for tri in dict.fromkeys(r["triangle"] for r in rows):
            for meth in ("l11", "l12"):
                sel = [r for r in rows if r["triangle"] == tri]
                w1 = sorted(set(r["w1"] for r in sel))
                frac = [np.mean([r[meth] for r in sel if r["w1"] == a]) for a in w1]
                series.append((f"{meth} {tri}", w1, frac))
        emit_plot(series, path, "Recovery over the weight simplex", "w1", "fraction recovered")


COLUMNS = {
    "cnd_table": ["n", "d", "cnd"],
    "pattern_sampling": ["trial", "unique_pairs", "bound"],
    "triangles": ["triangle", "w1", "w2", "w3", "l11", "l12"],
}


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> list[dict]:
    """Run `config`, write its files when ``output_dir`` is set, and return the rows.

    Raises
    ------
    NumericFailureRate
        If more than 1% of solver calls ended in numeric failure.  The
        rows (and files) are still produced.
    """
    cfg = config
    threads = thread_count() if threads is None else max(1, int(threads))
    settings = cfg.settings()
    tally = _Tally()
    stats = None
    if cfg.kind == "cnd_table":
        rows = _run_cnd(cfg)
    elif cfg.kind == "pattern_sampling":
        rows, stats = _run_sampling(cfg)
    else:
        A = experiment_matrix(cfg)
        runner = {"smv_sweep": _run_smv, "l11_vs_l12": _run_l11_l12, "boosted": _run_boosted,
                  "rembo": _run_rembo}.get(cfg.kind)
        if runner is not None:
            rows = runner(cfg, A, settings, threads, tally)
        else:
            rows = _run_triangles_kind(cfg, A, settings, threads)
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "results.csv", rows, COLUMNS.get(cfg.kind, RATE_COLUMNS))
        with open(out / "config.echo.json", "w", newline="\n") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if stats is not None:
            stats.write_csv(out / "patterns.csv")
        _plot(cfg, rows, out / "plot.svg")
    if tally.rate > MAX_FAILURE_RATE:
        raise NumericFailureRate(f"{tally.fails} of {tally.calls} solver calls failed numerically", rows)
    return rows
