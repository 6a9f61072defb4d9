"""
Command-line interface for fracdelay.

Subcommands solve, verify, symbol, mr and report run one battery on a JSON
run configuration and write CSV artifacts plus a JSON report. config manages
the user defaults.

Exit codes: 0 ok, 1 unexpected failure, 2 invalid input, 3 a check above
tolerance, 4 a spectral hit.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from fracdelay import __version__
from fracdelay.analysis.report import EXIT_SPECTRAL_HIT, METHODS, ReportGenerator
from fracdelay.core.config import RunConfig, get_config
from fracdelay.core.logging import configure_logging, get_logger
from fracdelay.core.validation import ConfigError, SpectralHitError, ValidationError

logger = get_logger(__name__)

EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2


def _load_run(args) -> RunConfig:
    """Run configuration from --config (or defaults) with command-line overrides."""
    config = get_config()
    if args.config:
        run = RunConfig.load(Path(args.config), config)
    else:
        run = RunConfig.defaults(config)

    if args.out:
        run.directory = args.out
    if args.grid_m is not None:
        run.grid_m = args.grid_m
    if args.contour_r is not None:
        run.contour_r = args.contour_r
    if args.tol is not None:
        run.residual_tol = args.tol
        run.identity_tol = args.tol
    if args.seed is not None:
        run.seed = args.seed
        if run.forcing.kind == "random":
            run.forcing.seed = args.seed
    run.validate()
    return run


def _run_battery(command: str, args) -> int:
    try:
        run = _load_run(args)
        generator = ReportGenerator(run, method=getattr(args, "method", "conv"))
        report = generator.run_command(command)
        generator.save_report(report)
    except SpectralHitError as e:
        logger.error("spectral hit: %s", e)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SPECTRAL_HIT
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        logger.error("I/O failure: %s", e)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED

    print(generator.generate_text(report))
    return report.exit_code


def cmd_solve(args) -> int:
    """Solve the configured problem."""
    return _run_battery("solve", args)


def cmd_verify(args) -> int:
    """Run the identity and residual battery."""
    return _run_battery("verify", args)


def cmd_symbol(args) -> int:
    """Scan the unit-circle symbols."""
    return _run_battery("symbol", args)


def cmd_mr(args) -> int:
    """Collect maximal-regularity evidence."""
    return _run_battery("mr", args)


def cmd_report(args) -> int:
    """Run every battery into one report."""
    return _run_battery("report", args)


def cmd_config(args) -> int:
    """View or modify the user configuration."""
    config = get_config()

    if args.show:
        print(json.dumps(config.to_dict(), indent=2))
    elif args.reset:
        config.reset()
        config.save()
        print("Configuration reset to defaults.")
    elif args.set:
        try:
            key, value = args.set.split("=", 1)
        except ValueError:
            print("Error: Invalid format. Use section.key=value", file=sys.stderr)
            return EXIT_VALIDATION
        try:
            config.set_value(key, value)
        except ConfigError as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        config.save()
        print(f"Set {key} = {value}")
    else:
        print("Use --show to view config, --set section.key=value to modify, --reset to reset")

    return 0


def _add_run_options(parser: argparse.ArgumentParser, with_method: bool = False) -> None:
    parser.add_argument(
        "-c", "--config", metavar="PATH",
        help="Run configuration (JSON), or a previous report to re-run"
    )
    parser.add_argument(
        "-o", "--out", metavar="DIR",
        help="Output directory for CSV files and the report"
    )
    parser.add_argument(
        "--grid-m", type=int, metavar="INT",
        help="Uniform node count of the circle grid"
    )
    parser.add_argument(
        "--contour-r", type=float, metavar="FLOAT",
        help="Contour radius for the quadrature check"
    )
    parser.add_argument(
        "--tol", type=float, metavar="FLOAT",
        help="Override the residual and identity tolerances"
    )
    parser.add_argument(
        "--seed", type=int, metavar="INT",
        help="Seed for random forcing and norm trials"
    )
    if with_method:
        parser.add_argument(
            "--method", choices=METHODS, default="conv",
            help="Solver: closed-form convolution, direct stepping, or both (default: conv)"
        )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="fracdelay",
        description="fracdelay - fractional difference equations of order 2 < alpha < 3 "
                    "with delay"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-file", metavar="PATH",
        help="Write logs to file"
    )
    parser.add_argument(
        "--log-level", choices=["debug", "info", "warning", "error"],
        default="warning", help="Set log level (default: warning)"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    solve_parser = subparsers.add_parser("solve", help="Solve the configured problem")
    _add_run_options(solve_parser, with_method=True)
    solve_parser.set_defaults(func=cmd_solve)

    verify_parser = subparsers.add_parser("verify", help="Run the identity and residual battery")
    _add_run_options(verify_parser)
    verify_parser.set_defaults(func=cmd_verify)

    symbol_parser = subparsers.add_parser("symbol", help="Scan the unit-circle symbols")
    _add_run_options(symbol_parser)
    symbol_parser.set_defaults(func=cmd_symbol)

    mr_parser = subparsers.add_parser("mr", help="Maximal-regularity evidence")
    _add_run_options(mr_parser)
    mr_parser.set_defaults(func=cmd_mr)

    report_parser = subparsers.add_parser("report", help="Run every battery into one report")
    _add_run_options(report_parser, with_method=True)
    report_parser.set_defaults(func=cmd_report)

    config_parser = subparsers.add_parser("config", help="View or modify configuration")
    config_parser.add_argument(
        "--show", action="store_true",
        help="Show current configuration"
    )
    config_parser.add_argument(
        "--set", metavar="KEY=VALUE",
        help="Set a configuration value (e.g., grid.m=8192)"
    )
    config_parser.add_argument(
        "--reset", action="store_true",
        help="Reset configuration to defaults"
    )
    config_parser.set_defaults(func=cmd_config)
    return parser


def main(argv: Optional[list] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    log_levels = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "error": logging.ERROR
    }
    configure_logging(level=log_levels.get(args.log_level, logging.WARNING),
                      log_file=args.log_file)

    if args.command is None:
        parser.print_help()
        return 0

    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
