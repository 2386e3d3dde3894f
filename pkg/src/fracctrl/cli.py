"""Command-line entry points.

Subcommands
-----------
run      execute a configured experiment, emit CSV (or an aligned table)
check    validate a configuration document and report every problem
kernel   evaluate the Mittag-Leffler kernel at one point (debugging aid)
decay    fit the algebraic decay of the solution-operator norm
gramian  assemble a configuration's Gramian and print its spectrum

Exit codes: 0 success, 1 validation failure, 2 at least one sweep row
failed.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .config import build_control, build_operator, parse_config
from .errors import ConfigError, FracctrlError
from .gramian import assemble_gramian
from .mlf import MLParams, ml_eval
from .runner import render_csv, render_table, run_experiment, write_results, write_table
from .spectral import SpectralOperator, verify_decay


def _load_config(path: str, out=sys.stderr):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config {path}: {exc}", file=out)
        return None
    try:
        return parse_config(text)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=out)
        return None


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if config is None:
        return 1
    if args.verbose:
        print(f"running {len(config.sweep.a_values)} sweep rows", file=sys.stderr)
    rows = run_experiment(config)
    if args.verbose:
        for r in rows:
            print(
                f"a={r.a:.3e} error={r.terminal_error:.6e} "
                f"iters={r.picard_iters} converged={r.converged} "
                f"wall={r.wall_time:.3f}s",
                file=sys.stderr,
            )
    if args.format == "csv":
        if args.out:
            write_results(rows, args.out, include_timing=args.timing)
        else:
            sys.stdout.write(render_csv(rows, include_timing=args.timing))
    else:
        if args.out:
            write_table(rows, args.out)
        else:
            sys.stdout.write(render_table(rows))
    failed = any(
        (not r.converged) or math.isnan(r.terminal_error) for r in rows
    )
    return 2 if failed else 0


def _cmd_check(args) -> int:
    config = _load_config(args.config, out=sys.stdout)
    if config is None:
        return 1
    print("ok")
    return 0


def _cmd_kernel(args) -> int:
    try:
        res = ml_eval(MLParams(args.alpha, args.beta), args.z)
    except FracctrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"value={res.value!r} est_abs_error={res.est_abs_error:.3e} branch={res.branch}")
    return 0


def _cmd_decay(args) -> int:
    try:
        op = SpectralOperator(eigenvalues=np.array([args.mu]))
        rep = verify_decay(op, args.alpha)
    except FracctrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"fitted_C={rep.fitted_C!r} fitted_slope={rep.fitted_slope!r} "
        f"max_ratio={rep.max_ratio!r}"
    )
    return 0


def _cmd_gramian(args) -> int:
    config = _load_config(args.config)
    if config is None:
        return 1
    op = build_operator(config)
    B = build_control(config)
    gram = assemble_gramian(
        op,
        config.system.alpha,
        B,
        config.problem.b,
        config.numerics.quad_nodes,
    )
    eigs = np.linalg.eigvalsh(gram.matrix)[::-1]
    for i, lam in enumerate(eigs, start=1):
        print(f"lambda_{i}={float(lam)!r}")
    print(f"eig_min={gram.eig_min!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracctrl",
        description="Regularized Gramian steering experiments for "
        "fractional-order spectral systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment sweep")
    p_run.add_argument("--config", required=True, help="configuration document path")
    p_run.add_argument("--out", default=None, help="output path (default: stdout)")
    p_run.add_argument("--format", choices=("csv", "table"), default="csv")
    p_run.add_argument(
        "--timing",
        action="store_true",
        help="write measured wall times into the CSV (not reproducible)",
    )
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="validate a configuration document")
    p_check.add_argument("--config", required=True)
    p_check.set_defaults(func=_cmd_check)

    p_kernel = sub.add_parser("kernel", help="evaluate the Mittag-Leffler kernel")
    p_kernel.add_argument("--alpha", type=float, required=True)
    p_kernel.add_argument("--beta", type=float, default=1.0)
    p_kernel.add_argument("--z", type=float, required=True)
    p_kernel.set_defaults(func=_cmd_kernel)

    p_decay = sub.add_parser("decay", help="fit solution-operator decay")
    p_decay.add_argument("--alpha", type=float, required=True)
    p_decay.add_argument("--mu", type=float, default=-1.0)
    p_decay.set_defaults(func=_cmd_decay)

    p_gram = sub.add_parser("gramian", help="print a configuration's Gramian spectrum")
    p_gram.add_argument("--config", required=True)
    p_gram.set_defaults(func=_cmd_gramian)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
