"""Command-line front end.

    bounds --config exp.toml [--preset fig1|fig2|fig3] [--out r.csv]
           [--seed N] [--threads N]      evaluate bounds, write CSV
    bounds simulate ...                  same, simulation block forced on
    bounds validate                      built-in oracle/property checks

Exit codes: 0 success, 2 configuration/validation failure, 1 runtime
error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import PRESETS, build_config, parse_config
from .errors import ConfigError
from .experiment import run_experiment, write_csv


def _add_common(parser: argparse.ArgumentParser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default,
                        help="TOML experiment file")
    parser.add_argument("--preset", choices=tuple(PRESETS), default=default,
                        help="baked-in experiment, overridable by --config")
    parser.add_argument("--out", metavar="PATH", default=default,
                        help="CSV output path (overrides the config)")
    parser.add_argument("--seed", type=int, metavar="U64", default=default,
                        help="master seed (overrides the config)")
    parser.add_argument("--threads", type=int, metavar="N", default=default,
                        help="worker threads for the sweep (default 1)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bounds",
        description="DoA MSE bounds for co-located MIMO radar: ZZB, "
                    "expected CRB, and a-priori bound across SNR sweeps.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")
    sim = sub.add_parser("simulate",
                         help="run the sweep with Monte Carlo simulation on")
    _add_common(sim, suppress=True)
    sub.add_parser("validate",
                   help="run the built-in oracle and property checks")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = getattr(args, "command", None)

    if command == "validate":
        from . import selfcheck
        try:
            return 0 if selfcheck.run_all() else 2
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    config_path = getattr(args, "config", None)
    preset = getattr(args, "preset", None)
    if config_path is None and preset is None:
        print("error: provide --config and/or --preset", file=sys.stderr)
        return 2
    try:
        if config_path is not None:
            cfg = parse_config(config_path, preset)
        else:
            cfg = build_config(None, preset)
        seed = getattr(args, "seed", None)
        if seed is not None:
            if not 0 <= seed < 2**64:
                print(f"error: --seed must fit an unsigned 64-bit integer, "
                      f"got {seed}", file=sys.stderr)
                return 2
            cfg = replace(cfg, simulation=replace(cfg.simulation, seed=seed))
        threads = getattr(args, "threads", None)
        if threads is not None:
            if threads < 1:
                print(f"error: --threads must be >= 1, got {threads}",
                      file=sys.stderr)
                return 2
            cfg = replace(cfg, threads=threads)
        out = getattr(args, "out", None)
        if out is not None:
            cfg = replace(cfg, output_path=out)
        if command == "simulate":
            cfg = replace(cfg, simulation=replace(cfg.simulation,
                                                  enabled=True))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        table = run_experiment(cfg)
        write_csv(table, cfg.output_path)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {cfg.output_path} ({len(table.rows)} rows)")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
