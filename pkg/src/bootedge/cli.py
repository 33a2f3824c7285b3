"""Command-line entry point: ``bootedge {compare,rates,prop1,diagnose,oracle}``.

Exit codes: 0 success, 2 configuration error, 3 oracle-suite failure,
4 acceptance-threshold failure.
"""
from __future__ import annotations

import argparse
import sys

from bootedge.catalog import CatalogError
from bootedge.config import KINDS, ConfigError, default_config, load_config
from bootedge.experiments import RUNNERS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_ACCEPTANCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bootedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", metavar="PATH", help="experiment config (INI)")
        p.add_argument("--seed", type=int, help="master seed; overrides the config")
        p.add_argument("--out", metavar="DIR", help="output directory; overrides the config")
        p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads (results do not depend on it)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs < 1:
        print("bootedge: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config:
            cfg = load_config(args.config, args.command)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
        elif args.seed is not None:
            cfg = default_config(args.command, args.seed)
        else:
            raise ConfigError("either --config or --seed is required (the seed is mandatory)")
        result = RUNNERS[args.command](cfg, out=args.out, jobs=args.jobs)
    except (ConfigError, CatalogError) as exc:
        print(f"bootedge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "oracle":
        sys.stdout.write(result.report)
        return EXIT_OK if result.passed else EXIT_ORACLE
    for name, ok in getattr(result, "checks", {}).items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if result.passed is False:
        return EXIT_ACCEPTANCE
    return EXIT_OK


def main_exit():
    sys.exit(main())
