"""Command line entry point: ``planarks solve|sweep|verify|convergence``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runs
from .config import load_config
from .errors import (
    ConfigError,
    DomainError,
    InvalidRequest,
    InvalidResolution,
    NumericalFailure,
    TruncationError,
)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planarks", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="device configuration file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    sub.add_parser("solve", parents=[common], help="single self-consistent solve")

    sweep = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    sweep.add_argument("--param", required=True, help="beta, kT, N, q or xc.C")
    sweep.add_argument("--values", required=True, type=_floats, help="comma-separated values")
    sweep.add_argument("--workers", type=int, default=1)

    verify = sub.add_parser("verify", parents=[common], help="numerical checks of the theory")
    verify.add_argument("--checks", default=",".join(runs.SUITES),
                        help="comma-separated subset of: " + ", ".join(runs.SUITES))
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, default=100)

    conv = sub.add_parser("convergence", parents=[common], help="grid convergence study")
    conv.add_argument("--ns", type=_ints, default=[250, 500, 1000, 2000])
    conv.add_argument("--levels", type=int, default=3)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (ConfigError, DomainError, InvalidResolution) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return runs.EXIT_INVALID_CONFIG
    try:
        if args.command == "solve":
            return runs.run_solve(cfg, args.out)
        if args.command == "sweep":
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            return runs.run_sweep(cfg, args.param, args.values, args.out, args.workers)
        if args.command == "verify":
            checks = [c.strip() for c in args.checks.split(",") if c.strip()]
            report = runs.run_verify(cfg, checks, args.seed, args.trials)
            args.out.mkdir(parents=True, exist_ok=True)
            runs.dump_json(report, args.out / "verify.json")
            for name, res in report["checks"].items():
                print(f"{name}: {res['status']}")
            return runs.EXIT_OK
        return runs.run_convergence_study(cfg, args.ns, args.out, args.levels)
    except (ConfigError, InvalidResolution) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return runs.EXIT_INVALID_CONFIG
    except (NumericalFailure, TruncationError, DomainError, InvalidRequest) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return runs.EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
