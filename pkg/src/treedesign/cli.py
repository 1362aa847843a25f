"""Command line entry point: ``treedesign sweep`` and ``treedesign validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import TreeDesignError
from .experiments import (
    ConfigError,
    ExperimentConfig,
    corrupt_channel,
    format_report,
    rows_to_csv,
    run_sweep,
    run_validation,
)
from .oracle import OracleBudget

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treedesign", description="Design quantizers for tree-structured detection networks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log design progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="design the network at each SNR and write a CSV")
    s.add_argument("--topology", default="tree22", help="tree22, parallelN (e.g. parallel4) or a JSON file")
    s.add_argument("--rl", type=int, help="leaf rate in bits (tree22)")
    s.add_argument("--rr", type=int, help="relay rate in bits (tree22)")
    s.add_argument("--rate", type=int, help="rate for every node (parallel, or tree22 default)")
    s.add_argument("--snr", type=_floats, default=[0.0], help="comma separated SNRs in dB; use --snr=-5,0,5 for negatives")
    s.add_argument("--bins", type=int, default=400)
    s.add_argument("--half-range", type=float, default=10.0)
    s.add_argument("--priors", type=_floats, default=[0.5, 0.5])
    s.add_argument("--model", help="JSON model file (priors and per-leaf PMFs) instead of the Gaussian model")
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--schedule", choices=["leaves-first", "relays-first"], default="leaves-first")
    s.add_argument("--workers", type=int, help="process pool size (default: CPU count)")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--dump-strategies", help="write the designed tables as JSON")

    v = sub.add_parser("validate", help="run the oracle, consistency and descent self-checks")
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--descent-seeds", type=int, default=10)
    v.add_argument("--max-tables", type=int, default=OracleBudget.max_total_tables)
    v.add_argument("--max-outcomes", type=int, default=OracleBudget.max_joint_outcomes)
    v.add_argument("--inject-fault", choices=["channel"], help="corrupt restricted-model channels (negative control)")
    return p


def _sweep(args) -> int:
    cfg = ExperimentConfig(
        topology=args.topology,
        leaf_rate=args.rl,
        relay_rate=args.rr,
        rate=args.rate,
        snr_db_list=args.snr,
        priors=tuple(args.priors),
        bins=args.bins,
        half_range=args.half_range,
        restarts=args.restarts,
        seed=args.seed,
        output_path=args.out,
        model_path=args.model,
        schedule=args.schedule,
        workers=args.workers,
        dump_strategies=args.dump_strategies,
    )
    rows = run_sweep(cfg)
    if not args.out:
        sys.stdout.write(rows_to_csv(rows))
    return EXIT_OK


def _validate(args) -> int:
    results = run_validation(
        OracleBudget(args.max_tables, args.max_outcomes),
        instances=args.instances,
        descent_seeds=args.descent_seeds,
        fault=corrupt_channel if args.inject_fault == "channel" else None,
    )
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _sweep(args) if args.command == "sweep" else _validate(args)
    except (ConfigError, TreeDesignError, ValueError, OSError) as exc:
        print(f"treedesign: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
