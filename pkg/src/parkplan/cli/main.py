"""Command-line entry point: ``parkplan {validate,plan,schedule,run}``."""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from ..errors import ParkPlanError
from . import io
from .config import load_config, validate_config
from .pipeline import Scenario, emit_reports, run_pipeline, run_plan

log = logging.getLogger("parkplan")


def bundled_config() -> Path:
    """Path of the scenario shipped with the package."""
    return Path(str(resources.files("parkplan") / "data" / "scenario.yaml"))


def _days(value):
    if value == "full":
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'full'") from None
    if k < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'full'")
    return k


def _seed(value):
    k = int(value)
    if not 0 <= k < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="scenario YAML (default: the bundled 37-bus scenario)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=_seed, default=None,
                        help="recorded in the reports; the pipeline itself is deterministic")
    common.add_argument("--gap", type=float, default=None, help="relative MILP gap")
    common.add_argument("--days", type=_days, default=None,
                        help="number of representative days to use, or 'full' for 365 days")
    common.add_argument("--dump-lp", action="store_true", help="write solver instances under OUT/lp/")
    common.add_argument("--soc-convention", choices=("physical", "literal"), default="physical",
                        help="discharge energy divided by (physical) or multiplied by (literal) the efficiency")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="parkplan", description="Parking-lot siting, sizing and scheduling.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a scenario config")
    sub.add_parser("plan", parents=[common], help="siting and sizing only")
    sp = sub.add_parser("schedule", parents=[common], help="schedule an existing plan")
    sp.add_argument("--plan", type=Path, required=True, help="plan.csv from a previous run")
    sub.add_parser("run", parents=[common], help="full pipeline with evaluation")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    config = args.config or bundled_config()
    if args.command == "validate":
        diags = validate_config(config)
        for d in diags:
            print(d)
        if not diags:
            print(f"{config}: ok")
        return 1 if diags else 0
    try:
        cfg = load_config(config)
        if args.seed is not None:
            cfg.seed = args.seed
        dump = args.out if args.dump_lp else None
        if args.command == "plan":
            plan, _ = run_plan(Scenario(cfg, args.days), args.gap, dump)
            written = [io.write_csv(args.out / "plan.csv", ("bus", "size_kw"), plan.lots)]
            manifest = [str(p.relative_to(args.out)) for p in written]
        else:
            lots = io.read_plan(args.plan) if args.command == "schedule" else None
            report = run_pipeline(cfg, days=args.days, gap=args.gap, soc_convention=args.soc_convention,
                                  dump_dir=dump, plan_lots=lots)
            manifest = emit_reports(report, args.out)
    except ParkPlanError as exc:
        print(f"parkplan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"parkplan: {exc}", file=sys.stderr)
        return 2
    for m in manifest:
        print(args.out / m)
    return 0


if __name__ == "__main__":
    sys.exit(main())
