# --- Main Application Entry Point ---
"""
safeban command line: run a JSON-configured experiment, run or print a
published preset, or plot an emitted CSV.

Exit codes: 0 success, 2 configuration error, 3 runtime fault.
"""

import argparse
import json
import sys
from typing import List, Optional

from config import PRESET_NAMES
from config_manager import ConfigManager, apply_overrides, to_dict
from logger_utils import LOG_LEVELS, logger, set_log_level
from validation_utils import ConfigurationError, validate_choice

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def initialize_application() -> bool:
    """Log the environment the simulator runs in"""
    logger("🚀 safeban: safe linear bandit simulator")
    logger(f"   Python Version: {sys.version.split()[0]}")
    logger(f"   Platform: {sys.platform}")
    if sys.version_info < (3, 8):
        logger("❌ Error: Python 3.8 or higher required", level="ERROR")
        return False
    return True


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", dest="out", help="output directory")
    parser.add_argument("--seed", type=int, help="base seed (u64)")
    parser.add_argument("--reps", type=int, help="number of replications")
    parser.add_argument("--threads", type=int, help="worker processes (default: $SAFEBAN_THREADS or 1)")
    parser.add_argument("--scale", type=int, help="divide the horizon (and fixed T′) by this power of 10")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safeban", description="Safe linear bandit simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    _add_run_options(run)

    preset = commands.add_parser("preset", help="run or print a published experiment")
    preset.add_argument("name", choices=PRESET_NAMES)
    preset.add_argument("--print-config", action="store_true", help="print the preset config as JSON and exit")
    _add_run_options(preset)

    plot = commands.add_parser("plot", help="render an emitted CSV as SVG")
    plot.add_argument("--in", dest="in_path", required=True, help="run, aggregate or snapshot CSV")
    plot.add_argument("--out", dest="out_path", required=True, help="SVG path")
    plot.add_argument("--kind", choices=["regret", "safeset"], default="regret")
    return parser


def _execute(cfg, args) -> int:
    from experiment_runner import run_experiment

    cfg = apply_overrides(cfg, output_dir=args.out, seed=args.seed, replications=args.reps,
                          threads=args.threads, scale=args.scale)
    set_log_level(args.log_level or cfg.log_level)
    result = run_experiment(cfg)
    print(result.report)
    faults = sum(1 for r in result.runs if r.fault is not None)
    return EXIT_RUNTIME if faults else EXIT_OK


def cmd_run(args) -> int:
    cfg = ConfigManager().load_config(args.config)
    return _execute(cfg, args)


def cmd_preset(args) -> int:
    from presets import preset

    cfg = preset(args.name)
    if args.print_config:
        cfg = apply_overrides(cfg, output_dir=args.out, seed=args.seed, replications=args.reps,
                              threads=args.threads, scale=args.scale)
        print(json.dumps(to_dict(cfg), indent=2, ensure_ascii=False))
        return EXIT_OK
    return _execute(cfg, args)


def cmd_plot(args) -> int:
    from plotting import plot_from_csv

    plot_from_csv(args.in_path, args.out_path, args.kind)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "preset": cmd_preset, "plot": cmd_plot}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "log_level", None):
            args.log_level = validate_choice(args.log_level.upper(), "--log-level", list(LOG_LEVELS))
            set_log_level(args.log_level)
        if args.command != "preset" or not args.print_config:
            if not initialize_application():
                return EXIT_RUNTIME
        return COMMANDS[args.command](args)
    except ConfigurationError as e:
        logger(f"❌ Configuration error: {str(e)}", level="ERROR")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        logger("🛑 Interrupted by user", level="WARNING")
        return EXIT_RUNTIME
    except Exception as e:
        logger(f"❌ Runtime fault: {type(e).__name__}: {str(e)}", level="ERROR")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
