"""``jsrec`` command-line entry point.

Exit codes: 0 success or recovered, 1 failure to recover (or no optimal
point exists), 2 usage or configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import face_count, prob_l1
from .bpsolve import SolverSettings, Status, solve_bp
from .combinatorics import cnd
from .core import format_float, make_rng, read_matrix, write_matrix
from .errors import ConfigError, JsrecError, NumericFailureRate
from .experiments import ExperimentConfig, run_experiment, thread_count
from .mmv import solve_l12
from .recover import boosted_l1, rembo_l1

EXIT_OK, EXIT_UNRECOVERED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


def _status_exit(status: Status) -> int:
    if status is Status.OPTIMAL:
        return EXIT_OK
    if status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return EXIT_UNRECOVERED
    return EXIT_NUMERIC


def _load(path, name):
    try:
        return read_matrix(path)
    except (OSError, ValueError) as exc:
        raise _UsageError(f"cannot read {name} from {path}: {exc}") from None


def _emit(M, out):
    if out:
        write_matrix(out, M)
    else:
        write_matrix(sys.stdout, M)


def _settings(args) -> SolverSettings:
    try:
        return SolverSettings(feas_tol=args.feas_tol, gap_tol=args.gap_tol, recovery_tol=args.recovery_tol)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _cmd_solve(args):
    A = _load(args.matrix, "matrix")
    b = _load(args.rhs, "right-hand side")
    if b.shape[1] != 1:
        raise _UsageError("solve expects a single right-hand side column; use l12 for several")
    try:
        rep = solve_bp(A, b[:, 0], _settings(args))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    print(f"status={rep.status.value} residual={rep.primal_residual:.3g} gap={rep.duality_gap:.3g}", file=sys.stderr)
    if rep.status is not Status.INFEASIBLE:
        _emit(rep.x[:, None], args.out)
    return _status_exit(rep.status)


def _cmd_l12(args):
    A = _load(args.matrix, "matrix")
    B = _load(args.rhs, "right-hand side")
    try:
        rep = solve_l12(A, B, _settings(args))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    print(f"status={rep.status.value} residual={rep.primal_residual:.3g} gap={rep.gap:.3g}", file=sys.stderr)
    if rep.status is not Status.INFEASIBLE:
        _emit(rep.X, args.out)
    return _status_exit(rep.status)


def _report_pipeline(rep, out):
    if rep.recovered:
        print(f"recovered at iteration {rep.success_iteration} with support "
              f"{','.join(map(str, rep.support))}", file=sys.stderr)
        _emit(rep.X, out)
        return EXIT_OK
    print(f"not recovered after {rep.iterations_used} iterations", file=sys.stderr)
    if rep.errors and len(rep.errors) == rep.iterations_used:
        return EXIT_NUMERIC
    return EXIT_UNRECOVERED


def _cmd_boost(args):
    A = _load(args.matrix, "matrix")
    B = _load(args.rhs, "right-hand side")
    try:
        rep = boosted_l1(A, B, _settings(args), threshold=args.threshold)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    return _report_pipeline(rep, args.out)


def _cmd_rembo(args):
    A = _load(args.matrix, "matrix")
    B = _load(args.rhs, "right-hand side")
    try:
        rep = rembo_l1(A, B, args.max_iter, make_rng(args.seed), _settings(args), threshold=args.threshold)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    return _report_pipeline(rep, args.out)


def _cmd_cnd(args):
    try:
        print(cnd(args.n, args.d))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    return EXIT_OK


def _cmd_facecount(args):
    A = _load(args.matrix, "matrix")
    try:
        support = [int(t) for t in args.support.split(",") if t.strip()]
        fc = face_count(A, support, _settings(args), threads=thread_count())
    except (ValueError, JsrecError) as exc:
        raise _UsageError(str(exc)) from None
    if args.out:
        fc.write_csv(args.out)
    else:
        print("pattern,recovered")
        for pattern, ok in fc.per_pattern.items():
            print(f"{pattern},{int(ok)}")
    print(f"surviving={fc.surviving} total={fc.total} p_l1={format_float(prob_l1(fc))}", file=sys.stderr)
    return EXIT_OK


def _cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    elif cfg.output_dir is None:
        cfg.output_dir = f"jsrec-{cfg.kind}"
    try:
        rows = run_experiment(cfg)
    except NumericFailureRate as exc:
        print(f"numeric failure: {exc}; partial results in {cfg.output_dir}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{len(rows)} rows written to {cfg.output_dir}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jsrec", description="Joint-sparse recovery from multiple measurement vectors.")
    sub = p.add_subparsers(dest="command", required=True)

    def tolerances(sp):
        sp.add_argument("--feas-tol", type=float, default=1e-9)
        sp.add_argument("--gap-tol", type=float, default=1e-9)
        sp.add_argument("--recovery-tol", type=float, default=1e-5)

    def problem(sp, rhs_help):
        sp.add_argument("--matrix", required=True, help="matrix file for A")
        sp.add_argument("--rhs", required=True, help=rhs_help)
        sp.add_argument("--out", help="write the solution here instead of stdout")
        tolerances(sp)

    sp = sub.add_parser("solve", help="basis pursuit for one measurement vector")
    problem(sp, "matrix file with one column b")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("l12", help="minimize the sum of row norms subject to AX = B")
    problem(sp, "matrix file for B")
    sp.set_defaults(func=_cmd_l12)

    sp = sub.add_parser("boost", help="boosted l1: basis pursuit on each column of B")
    problem(sp, "matrix file for B")
    sp.add_argument("--threshold", type=int, help="largest accepted support size (default m // 2)")
    sp.set_defaults(func=_cmd_boost)

    sp = sub.add_parser("rembo", help="ReMBo: basis pursuit on random combinations of the columns of B")
    problem(sp, "matrix file for B")
    sp.add_argument("--max-iter", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threshold", type=int, help="largest accepted support size (default m // 2)")
    sp.set_defaults(func=_cmd_rembo)

    sp = sub.add_parser("cnd", help="maximum number of orthants of R^N met by a D-dimensional subspace")
    sp.add_argument("n", type=int, metavar="N")
    sp.add_argument("d", type=int, metavar="D")
    sp.set_defaults(func=_cmd_cnd)

    sp = sub.add_parser("facecount", help="basis pursuit recovery of every sign pattern on a support")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--support", required=True, help="comma-separated 0-based column indices")
    sp.add_argument("--out", help="CSV output path (default stdout)")
    tolerances(sp)
    sp.set_defaults(func=_cmd_facecount)

    sp = sub.add_parser("experiment", help="run an experiment described by a JSON file")
    sp.add_argument("config")
    sp.add_argument("--output-dir", help="override the configured output directory")
    sp.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (_UsageError, ConfigError) as exc:
        print(f"jsrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
