"""Command-line entry point.

    python -m app.main simulate --preset smith --events 1000 --seed 7 --out-dir data/
    python -m app.main select --quotes data/quotes.csv --trades data/trades.csv --out fit_report.json
    python -m app.main table fit_report.json

Exit codes: 0 success, 1 absorbed chain or unexpected failure,
2 insufficient data, 3 timeout, 4 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from app.errors import (
    AbsorbedChainError,
    BudgetExhaustedError,
    DomainError,
    InputFormatError,
    InsufficientDataError,
    IntensityValidationError,
    PairingError,
)
from app.models.schemas import EstimateReport, RunConfig
from app.services import comparison_service, estimation_service, matching_service, simulation_service
from app.services.report_service import read_report, render_table, write_report

logger = logging.getLogger("app.main")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INSUFFICIENT = 2
EXIT_TIMEOUT = 3
EXIT_INPUT = 4

# Command-line flags that map one-to-one onto RunConfig fields.
_CONFIG_FLAGS = {
    "preset": str, "theta": float, "kappa": float, "rho": float, "n": int,
    "tick_size": str, "price_offset": str, "events": int, "burn_in": int, "seed": int,
    "eta": float, "mo_volumes": str, "mo_volume_probs": str,
    "quotes": str, "trades": str, "out_dir": str, "label": str,
    "session_start": str, "session_end": str, "timezone": str, "window_ns": int, "side": str,
    "mode": str, "sample_mode": str, "variant": str, "budget_seconds": float, "max_in_sample": int,
    "alpha": float, "fit_report": str, "threads": int, "moment_order": float, "moment_cap": float,
}
_BOOL_FLAGS = ("fix_eta", "full_sample_mean")

_DEFAULT_REPORTS = {
    "estimate": "fit_report.json",
    "select": "fit_report.json",
    "predict": "prediction_report.json",
    "match": "match_report.json",
    "compare": "wilcoxon_report.json",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.main", description="ZI/GZI order-book models")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate", "estimate", "select", "predict", "match", "compare"):
        sub = commands.add_parser(name)
        sub.add_argument("--config", help="plain-text key = value run config")
        sub.add_argument("--out", help="report path (default: <out_dir>/<command>_report.json)")
        for flag, kind in _CONFIG_FLAGS.items():
            sub.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=kind, default=None)
        for flag in _BOOL_FLAGS:
            sub.add_argument(f"--{flag.replace('_', '-')}", dest=flag, action="store_const", const=True,
                             default=None)
        sub.add_argument("--whole-days", dest="apply_window", action="store_const", const=False, default=None,
                         help="keep whole days instead of the trading-session window")
        sub.add_argument("--gzi", dest="mode", action="store_const", const="gzi")
        if name == "compare":
            sub.add_argument("--x", dest="compare_x", nargs="+", default=None)
            sub.add_argument("--y", dest="compare_y", nargs="+", default=None)

    table = commands.add_parser("table", help="render a fit report as a text table")
    table.add_argument("report")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, key, None)
                 for key in (*_CONFIG_FLAGS, *_BOOL_FLAGS, "apply_window", "compare_x", "compare_y")}
    overrides["command"] = args.command
    if args.config:
        return RunConfig.load(args.config, **overrides)
    return RunConfig.model_validate({k: v for k, v in overrides.items() if v is not None})


def _report_path(args: argparse.Namespace, config: RunConfig) -> Path:
    return Path(args.out) if args.out else Path(config.out_dir) / _DEFAULT_REPORTS[args.command]


def run(args: argparse.Namespace) -> int:
    if args.command == "table":
        sys.stdout.write(render_table(read_report(args.report, EstimateReport)))
        return EXIT_OK

    config = resolve_config(args)
    logger.info("Running %s", args.command)
    if args.command == "simulate":
        manifest = simulation_service.simulate_to_files(config)
        if args.out:
            write_report(args.out, manifest)
        return EXIT_OK

    handlers = {
        "estimate": estimation_service.estimate,
        "select": estimation_service.select,
        "predict": estimation_service.predict,
        "match": matching_service.match,
        "compare": comparison_service.compare,
    }
    report = handlers[args.command](config)
    path = write_report(_report_path(args, config), report)
    logger.info("Wrote %s", path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except InsufficientDataError as exc:
        logger.error("Insufficient data: %s", exc)
        return EXIT_INSUFFICIENT
    except BudgetExhaustedError as exc:
        logger.error("Timeout: %s", exc)
        return EXIT_TIMEOUT
    except AbsorbedChainError as exc:
        logger.error("Absorbed chain: %s", exc)
        return EXIT_FAILURE
    except (InputFormatError, DomainError, IntensityValidationError, PairingError, ValidationError,
            FileNotFoundError) as exc:
        logger.error("Input error: %s", exc)
        return EXIT_INPUT
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
