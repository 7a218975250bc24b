#!/usr/bin/env python3
"""
Command-line driver for the GW modelling toolkit.

Usage:
  python backend/scripts/gw_cli.py dist --input ewhp.csv --x Easting --y Northing --out dist.csv
  python backend/scripts/gw_cli.py gwr --input dub.csv --x X --y Y --dependent GenEl2004 \\
      --vars DiffAdd,LARent,SC1,Unempl,LowEduc,Age18_24,Age25_44,Age45_64 \\
      --kernel bisquare --adaptive --bw auto --criterion aicc --out gwr.csv
  python backend/scripts/gw_cli.py gwpca --config gwpca.env --robust mcd

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

# Ensure backend root is on path when run as script
_SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
_BACKEND_ROOT = os.path.dirname(_SCRIPT_DIR)
if _BACKEND_ROOT not in sys.path:
    sys.path.insert(0, _BACKEND_ROOT)

from config import Config, build_gw_controller  # noqa: E402
from exceptions import ConfigError, GwModelError  # noqa: E402
from models.run_config import COMMANDS, RunConfig  # noqa: E402


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 1), not argparse's exit 2"""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gw_cli",
        description="Geographically weighted summary statistics, PCA and regression.",
    )
    parser.add_argument("command", help=f"One of: {', '.join(COMMANDS)}")
    parser.add_argument("--config", help="key=value file of defaults (flag names without dashes)")
    parser.add_argument("--input", help="Input CSV with a header row")
    parser.add_argument("--x", help="Easting / longitude column (default: x)")
    parser.add_argument("--y", help="Northing / latitude column (default: y)")
    parser.add_argument("--geographic", action="store_true", default=None, help="Great-circle distances on lon/lat")
    parser.add_argument("--dependent", help="Dependent variable")
    parser.add_argument("--vars", help="Comma-separated independent / analysis variables")
    parser.add_argument("--kernel", help="global, gaussian, exponential, boxcar, bisquare or tricube")
    parser.add_argument("--bw", help="Bandwidth (distance, or neighbour count with --adaptive) or 'auto'")
    parser.add_argument("--adaptive", action="store_true", default=None, help="Adaptive (nearest-neighbour) bandwidth")
    parser.add_argument("--criterion", help="Bandwidth objective for GW regression: cv or aicc")
    parser.add_argument("--k", type=int, help="Retained components for gwpca (default: 2)")
    parser.add_argument("--robust", help="none, filtered, iterative (gwr) or mcd (gwpca)")
    parser.add_argument("--cn-thresh", type=float, help="Local condition number threshold (default: 30)")
    parser.add_argument("--adjust", action="store_true", default=None, help="Locally compensated ridge (gwr-lcr)")
    parser.add_argument("--lambda", type=float, help="User ridge applied at every location (gwr-lcr)")
    parser.add_argument("--quantiles", action="store_true", default=None, help="Local medians, IQRs and QIs (gwss)")
    parser.add_argument("--standardize", action="store_true", default=None, help="Z-score variables before gwpca")
    parser.add_argument("--refine", action="store_true", default=None, help="Re-select bandwidths in gwr-select")
    parser.add_argument("--predict-input", help="Target locations CSV for gwr-predict")
    parser.add_argument("--out", help="Output file (stdout when omitted)")
    parser.add_argument("--format", help="csv or geojson")
    parser.add_argument("--seed", type=int, help="Seed for the robust PCA subset search")
    parser.add_argument("--threads", type=int, help="Worker threads (default: GW_THREADS or all cores)")
    parser.add_argument("--dist-cache", help="Binary distance cache for dist: reused when it matches, written otherwise")
    parser.add_argument("--earth-radius", type=float, help="Great-circle sphere radius in meters")
    parser.add_argument("--power", type=float, help="Minkowski power (default: 2)")
    parser.add_argument("--stream", action="store_true", default=None, help="Compute distance rows on demand")
    parser.add_argument("--verbose", action="store_true", default=None, help="Debug logging")
    return parser


def read_config_file(path: str) -> Dict[str, Any]:
    """key=value defaults; keys may use dashes or underscores"""
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}", path=path)
    return {key.strip().replace("-", "_"): value for key, value in dotenv_values(path).items() if value is not None}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge config-file defaults with flags (flags win) into a RunConfig"""
    options: Dict[str, Any] = {"format": Config.OUTPUT_FORMAT, "kernel": Config.DEFAULT_KERNEL, "cn_thresh": Config.CN_THRESHOLD}
    if args.config:
        options.update(read_config_file(args.config))
    flags = {key: value for key, value in vars(args).items() if value is not None and key not in ("config", "verbose")}
    options.update(flags)
    return RunConfig(**options)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc.message}\n")
        return exc.exit_code

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(levelname)s] %(message)s",
    )

    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: unknown command '{args.command}' (choose from {', '.join(COMMANDS)})\n")
        return 1

    try:
        config = resolve_config(args)
    except GwModelError as exc:
        sys.stderr.write(f"error: {exc.message}\n")
        return exc.exit_code
    except ValidationError as exc:
        for error in exc.errors():
            field = ".".join(str(part) for part in error["loc"])
            sys.stderr.write(f"error: {field}: {error['msg']}\n")
        return 1

    controller = build_gw_controller(threads=config.threads, seed=config.seed, earth_radius=config.earth_radius)
    return controller.run(config)


if __name__ == "__main__":
    sys.exit(main())
