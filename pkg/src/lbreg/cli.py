"""Command line interface.

Subcommands: `phase` (recovery grid sweep to trials.csv/curves.csv),
`convergence` (three-solver comparison to conv.csv), `solve` (one
model from matrix/rhs CSVs), and `certify` (JSON reports for RIP,
strong convexity, and threshold constants). Errors from bad inputs are
printed to stderr and produce exit code 1.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .certificates import nu_constant, recovery_thresholds, rip_constant
from .harness import (
    desk_scale_config,
    paper_scale_config,
    run_convergence,
    run_phase,
    write_conv_csv,
    write_curves_csv,
    write_trials_csv,
)
from .models import (
    DenseVectorOp,
    Model,
    load_matrix_csv,
    load_vector_csv,
    save_vector_csv,
)
from .solvers import SolverError, SolverOptions, run_solver, write_trace_csv


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit_report(report):
    print(json.dumps(dataclasses.asdict(report), indent=2,
                     default=_jsonable))


def _cmd_solve(args):
    A = load_matrix_csv(args.matrix)
    b = load_vector_csv(args.rhs)
    model = Model(DenseVectorOp(A), b, args.alpha, sigma=args.sigma)
    opts = SolverOptions(variant=args.variant, tol=args.tol,
                         max_iter=args.max_iter,
                         record_iterates=args.dump_iterates)
    trace = run_solver(model, opts)
    x = trace.final_x
    print(f"status: {trace.status}")
    print(f"iterations: {trace.iterations}")
    print(f"grad_norm: {trace.records[-1].grad_norm:.6e}")
    print(f"nonzeros: {int(np.count_nonzero(x))} of {x.size}")
    if args.out:
        save_vector_csv(args.out, x)
        print(f"solution written to {args.out}")
    if args.trace:
        write_trace_csv(args.trace, trace, dump_iterates=args.dump_iterates)
        print(f"trace written to {args.trace}")
    return 0


def _cmd_convergence(args):
    result = run_convergence(m=args.m, n=args.n, k=args.k, kind=args.kind,
                             alpha_multiple=args.alpha_mult, seed=args.seed,
                             tol=args.tol, max_iter=args.max_iter)
    write_conv_csv(args.out, result.rows)
    for solver in ("fixed", "kicking", "bb"):
        print(f"{solver}: {result.iterations[solver]} iterations")
    print(f"rows written to {args.out}")
    return 0


def _cmd_phase(args):
    base = paper_scale_config() if args.paper_scale else desk_scale_config()
    fields = dataclasses.asdict(base)
    if args.config:
        with open(args.config, "rb") as fh:
            overrides = tomllib.load(fh)
        unknown = set(overrides) - set(fields)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        fields.update(overrides)
    config = type(base)(**fields)
    result = run_phase(config, workers=args.workers, smooth=args.smooth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trials_csv(out / "trials.csv", result.trials, timing=args.timing)
    write_curves_csv(out / "curves.csv", result.curves)
    print(f"{len(result.trials)} trials and {len(result.curves)} curve "
          f"points written to {out}")
    return 0


def _cmd_certify(args):
    if args.report == "rip":
        _emit_report(rip_constant(load_matrix_csv(args.matrix), args.k))
    elif args.report == "nu":
        _emit_report(nu_constant(load_matrix_csv(args.matrix),
                                 load_vector_csv(args.xstar), args.alpha))
    else:
        _emit_report(recovery_thresholds(args.delta, args.alpha,
                                         xS_inf=args.xsinf,
                                         xZ_inf=args.xzinf,
                                         x_inf=args.xinf))
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lbreg",
        description="Sparse and low-rank recovery via dual linearized "
                    "Bregman solvers")
    sub = parser.add_subparsers(dest="command")

    p_solve = sub.add_parser("solve", help="solve one model from CSV inputs")
    p_solve.add_argument("--matrix", required=True,
                         help="sensing matrix CSV, one row per line")
    p_solve.add_argument("--rhs", required=True,
                         help="measurement vector CSV, single column")
    p_solve.add_argument("--alpha", type=float, required=True)
    p_solve.add_argument("--sigma", type=float, default=0.0,
                         help="noise radius; 0 for equality constraints")
    p_solve.add_argument("--variant", default="bb",
                         choices=("fixed", "kicking", "bb"))
    p_solve.add_argument("--tol", type=float, default=1e-6)
    p_solve.add_argument("--max-iter", type=int, default=20000)
    p_solve.add_argument("--out", help="write the solution vector CSV here")
    p_solve.add_argument("--trace", help="write the iteration trace CSV here")
    p_solve.add_argument("--dump-iterates", action="store_true",
                         help="also write y/x iterates to sidecar CSVs")
    p_solve.set_defaults(func=_cmd_solve)

    p_conv = sub.add_parser("convergence",
                            help="compare the three solvers on one instance")
    p_conv.add_argument("--m", type=int, required=True)
    p_conv.add_argument("--n", type=int, required=True)
    p_conv.add_argument("--k", type=int, required=True)
    p_conv.add_argument("--kind", default="gaussian",
                        choices=("flat", "gaussian", "powerlaw"))
    p_conv.add_argument("--alpha-mult", type=float, default=10.0)
    p_conv.add_argument("--seed", type=int, default=0)
    p_conv.add_argument("--tol", type=float, default=1e-6)
    p_conv.add_argument("--max-iter", type=int, default=100000)
    p_conv.add_argument("--out", required=True)
    p_conv.set_defaults(func=_cmd_convergence)

    p_phase = sub.add_parser("phase", help="run the phase-transition grid")
    p_phase.add_argument("--config",
                         help="TOML file overriding the default grid fields")
    p_phase.add_argument("--out", required=True, help="output directory")
    p_phase.add_argument("--paper-scale", action="store_true",
                         help="start from the full n=400 grid instead of "
                              "the desk-scale default")
    p_phase.add_argument("--smooth", action="store_true",
                         help="3-point moving average on the cutoff curves")
    p_phase.add_argument("--workers", type=int, default=1)
    p_phase.add_argument("--timing", action="store_true",
                         help="include the wall_time column (breaks "
                              "byte-for-byte reproducibility)")
    p_phase.set_defaults(func=_cmd_phase)

    p_cert = sub.add_parser("certify", help="emit a certificate as JSON")
    cert_sub = p_cert.add_subparsers(dest="report")

    c_rip = cert_sub.add_parser("rip", help="exact RIP constant")
    c_rip.add_argument("--matrix", required=True)
    c_rip.add_argument("--k", type=int, required=True)
    c_rip.set_defaults(func=_cmd_certify)

    c_nu = cert_sub.add_parser("nu",
                               help="restricted strong convexity constant")
    c_nu.add_argument("--matrix", required=True)
    c_nu.add_argument("--xstar", required=True)
    c_nu.add_argument("--alpha", type=float, required=True)
    c_nu.set_defaults(func=_cmd_certify)

    c_thr = cert_sub.add_parser("thresholds",
                                help="recovery threshold constants")
    c_thr.add_argument("--delta", type=float, required=True)
    c_thr.add_argument("--alpha", type=float, required=True)
    c_thr.add_argument("--xsinf", type=float, default=0.0)
    c_thr.add_argument("--xzinf", type=float, default=0.0)
    c_thr.add_argument("--xinf", type=float, default=None)
    c_thr.set_defaults(func=_cmd_certify)

    return parser


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
