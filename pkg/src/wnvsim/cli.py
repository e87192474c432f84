"""Command-line entry point.

    wnvsim run   --config PATH [--seed U64] [--out DIR] [--algo NAME]
    wnvsim sweep --axis NAME --values CSV-LIST [--config PATH] [--seed] [--out] [--algo]

Exit codes: 0 ok, 1 configuration error, 2 output I/O error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    ConfigError,
    DegenerateChannelError,
    EighConvergenceError,
    InvariantError,
    OutputError,
    SingularMatrixError,
    ZeroDemandError,
)
from .harness import ALGO_CHOICES, SWEEP_AXES, run_experiment, sweep, write_outputs

_NUMERICAL_ERRORS = (
    DegenerateChannelError,
    EighConvergenceError,
    InvariantError,
    SingularMatrixError,
    ZeroDemandError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wnvsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--algo", choices=ALGO_CHOICES, default=None,
                       help="algorithm selector (default: from config)")

    p_run = sub.add_parser("run", help="single experiment")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="one run per axis value")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES),
                         help="config axis to sweep")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 1,4,8")
    return parser


def _parse_values(raw: str) -> list[float]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if part:
            out.append(float(part))
    return out


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out_dir = args.out
        config.validate()
        if args.command == "run":
            result = run_experiment(config, args.algo)
            paths = write_outputs(result, config.out_dir)
            print(f"wrote {paths['timeseries']} and {paths['summary']}")
        else:
            values = _parse_values(args.values)
            sweep(config, args.axis, values, algo=args.algo, out_dir=config.out_dir)
            print(f"wrote sweep outputs under {config.out_dir}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
