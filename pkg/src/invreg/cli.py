"""Command-line entry point: ``invreg <subcommand> [--config FILE] [--out FILE|DIR]``.

Flags override keys of the config file. Exit status is 0 on success, 2 on
argument errors and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import ArgumentError, InvRegError, NumericalError
from .harness import EXPERIMENTS, ExperimentConfig, _parse_value, check_files, load_config, run_experiment

EXIT_OK, EXIT_ARGUMENT, EXIT_NUMERICAL = 0, 2, 3

# (flag, key, type, help) per subcommand
_FLAGS = {
    "rate-tikhonov": [
        ("--n", "n", int, "grid intervals"),
        ("--f", "f", float, "source term"),
        ("--deltas", "deltas", _parse_value, "noise levels, e.g. [1e-1,1e-2,1e-3]"),
        ("--repeats", "repeats", int, "noise draws per level"),
        ("--alpha-c", "alpha_c", float, "alpha = c * delta"),
    ],
    "rate-fem": [
        ("--problem", "problem", str, "cexample or aexample"),
        ("--ns", "ns", _parse_value, "grid sizes, e.g. [16,32,64,128]"),
        ("--ref-n", "ref_n", int, "reference grid size"),
        ("--f", "f", float, "source term"),
    ],
    "radon-svd": [
        ("--kmax", "kmax", int, "largest degree k"),
        ("--m", "m", int, "pixels per side"),
        ("--nt", "nt", int, "offset nodes"),
        ("--ntheta", "ntheta", int, "angle nodes"),
    ],
    "learn": [
        ("--method", "method", str, "gs, lsq, bisvd or vrkhs"),
        ("--experts", "experts", str, "expert-pair CSV"),
        ("--queries", "queries", str, "query CSV (optional)"),
        ("--epsilon", "epsilon", float, "Gram-Schmidt regularization"),
        ("--kernel", "kernel", str, "kernel kind for vrkhs"),
        ("--bandwidth", "bandwidth", float, "kernel bandwidth"),
        ("--alpha", "alpha", float, "kernel ridge parameter"),
    ],
    "iterate": [
        ("--method", "method", str, "landweber, irgn, irli2, irli-*, irgn-* or compare"),
        ("--problem", "problem", str, "cexample, aexample or scalar"),
        ("--delta", "delta", float, "noise level"),
        ("--tau", "tau", float, "discrepancy factor"),
        ("--max-iter", "max_iter", int, "iteration cap"),
        ("--two-step", "two_step", _parse_value, "true for the two-step forms"),
    ],
    "select": [
        ("--rule", "rule", str, "apriori, morozov, gcv, lcurve or erm"),
        ("--grid", "grid_file", str, "CSV of decreasing alphas (first column)"),
        ("--tau", "tau", float, "Morozov factor"),
        ("--noise", "noise", float, "noise level"),
    ],
    "hybrid": [
        ("--deltas", "deltas", _parse_value, "noise levels"),
        ("--n", "n", int, "grid intervals"),
        ("--expert-count", "expert_count", int, "expert pairs for the surrogate"),
    ],
    "nnfit": [
        ("--target", "target", str, "grid CSV or 'builtin'"),
        ("--neurons", "neurons", int, "number of neurons"),
        ("--restarts", "restarts", int, "seeded restarts"),
        ("--activation", "activation", str, "activation kind"),
    ],
    "greedy": [
        ("--target", "target", str, "grid CSV or 'builtin'"),
        ("--scales", "scales", int, "largest scale M"),
        ("--atoms", "atoms", int, "greedy steps N"),
    ],
    "tikhonov": [
        ("--problem", "problem", str, "cexample, aexample or diag"),
        ("--alpha", "alpha", float, "regularization parameter"),
        ("--delta", "delta", float, "noise level"),
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ArgumentError(message)


def _key_value(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), _parse_value(v)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="invreg", description="Regularization experiments with CSV output.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=(EXPERIMENTS[name].__doc__ or "").strip().split("\n")[0])
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--out", help="output CSV file, or a directory for <subcommand>.csv")
        sp.add_argument("--workers", type=int, help="thread pool size (results do not depend on it)")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--set", action="append", type=_key_value, default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
        for flag, key, typ, hlp in _FLAGS[name]:
            sp.add_argument(flag, dest=key, type=typ, help=hlp)
    return parser


def _out_path(out, command: str) -> str:
    if out is None:
        return f"{command}.csv"
    if os.path.isdir(out) or out.endswith(("/", os.sep)):
        return os.path.join(out, f"{command}.csv")
    return out


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config, args.command)
        cfg = ExperimentConfig(args.command, cfg.params, cfg.base_dir)
    else:
        cfg = ExperimentConfig(args.command, {}, os.getcwd())
    over = {key: getattr(args, key) for _, key, _, _ in _FLAGS[args.command]}
    over["workers"] = args.workers
    over["seed"] = args.seed
    over.update(dict(args.set))
    cfg = cfg.with_overrides(**over)
    # flags given on the command line resolve against the working directory
    for _, key, _, _ in _FLAGS[args.command]:
        val = getattr(args, key)
        if isinstance(val, str) and val != "builtin" and key in ("experts", "queries", "target", "grid_file"):
            cfg.params[key] = os.path.abspath(val)
    check_files(cfg)
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        path = _out_path(args.out, args.command)
        run_experiment(args.command, cfg, path)
    except ArgumentError as exc:
        print(f"invreg: argument error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except NumericalError as exc:
        print(f"invreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvRegError as exc:
        print(f"invreg: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError) as exc:
        # mistyped config values surface as plain conversion errors
        print(f"invreg: argument error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"invreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
