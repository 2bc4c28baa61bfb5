"""Command line: ``nsac run|mms|delta|decay <config>``.

Exit codes: 0 success, 2 invalid input (config, mode, grid), 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..allen_cahn import ModeError
from ..channel import GridError
from ..state import SolverError
from .config import ConfigError, load_config
from .mms import MMS_CASES, run_mms
from .run import run_decay, run_delta_study, run_simulation

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


def _deltas(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid delta list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsac", description="Two-phase channel flow with GNBC walls")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="advance a configuration to t_end")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir", default=None)

    p = sub.add_parser("mms", help="manufactured-solution refinement study")
    p.add_argument("config")
    p.add_argument("--case", required=True, choices=MMS_CASES)
    p.add_argument("--levels", type=int, default=4)

    p = sub.add_parser("delta", help="delta-approximate runs against relaxation")
    p.add_argument("config")
    p.add_argument("--deltas", required=True, type=_deltas,
                   help="comma or space separated, strictly decreasing")

    p = sub.add_parser("decay", help="run, fit the exponential decay, write a summary")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            rep = run_simulation(cfg, output_dir=args.output_dir)
            print(json.dumps({**rep.summary, "snapshot": str(rep.snapshot_path),
                              "diagnostics": str(rep.diagnostics_path)}, indent=2))
        elif args.command == "decay":
            rep = run_decay(cfg, output_dir=args.output_dir)
            print(json.dumps({**rep.summary, "snapshot": str(rep.snapshot_path),
                              "diagnostics": str(rep.diagnostics_path)}, indent=2))
        elif args.command == "mms":
            print(run_mms(cfg, args.case, n_levels=args.levels).format())
        else:
            print(run_delta_study(cfg, args.deltas).table())
    except (ConfigError, ModeError, GridError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
