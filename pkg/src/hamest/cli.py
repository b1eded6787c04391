"""Command line front end.

Subcommands map one-to-one onto sweep modes::

    hamest bound-compare --config exp.ini [--seed N] [--out PATH] [--format csv|json] [--jobs N]
    hamest optimize      --config exp.ini ...
    hamest pea-sweep     --config exp.ini ...
    hamest lemma-test    --config exp.ini ...
    hamest dump-family   --config exp.ini ...

Exit codes: 0 success, 2 configuration error, 3 computation error.  The only
environment override is ``HAMEST_TOL_PROFILE``, which selects a named
tolerance profile before anything runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import tolerances
from .sweeps import MODES, ComputationError, ConfigError, load_config, run, write_result


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamest",
        description="Precision sweeps for Hamiltonian-parameter estimation.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a {mode} sweep")
        p.add_argument("--config", required=True, help="experiment config file (INI)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output path")
        p.add_argument("--format", default=None, choices=("csv", "json"),
                       help="override the output format")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker threads for independent grid points")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    profile = os.environ.get("HAMEST_TOL_PROFILE")
    if profile:
        try:
            tolerances.use_profile(profile)
        except KeyError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2

    try:
        cfg = load_config(args.config, mode=args.mode)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_path"] = args.out
        if args.format is not None:
            overrides["out_format"] = args.format
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            overrides["jobs"] = args.jobs
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run(cfg)
        if cfg.mode != "dump-family":
            write_result(result, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 3

    print(json.dumps(result.summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
