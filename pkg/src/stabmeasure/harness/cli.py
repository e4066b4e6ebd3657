"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .config import ConfigError, load_config, to_text
from .oracles import ORACLES
from .report import ReportIOError, emit, to_csv, to_json
from .runner import run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parse_set(items: Optional[List[str]]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabmeasure",
                                description="Seeded Monte Carlo checks for stabilizing random measures")
    sub = p.add_subparsers(dest="command", required=True)

    def add_config_args(sp):
        sp.add_argument("config_path", nargs="?", help="flat key = value config file")
        sp.add_argument("--config", dest="config_flag", help="config file (alternative to positional)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key (repeatable)")

    r = sub.add_parser("run", help="run an experiment and emit its convergence report")
    add_config_args(r)
    r.add_argument("--out", help="output path (stdout when omitted)")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("-v", "--verbose", action="store_true")

    v = sub.add_parser("validate", help="check a config and print it normalised")
    add_config_args(v)

    o = sub.add_parser("oracle", help="print the values of a reference oracle")
    o.add_argument("name", choices=sorted(ORACLES) + ["all"])
    return p


def _load(args):
    path = args.config_path or args.config_flag
    if path is None:
        raise ConfigError("config", "no config file given")
    overrides = _parse_set(args.set)
    for key in ("seed", "reps", "threads"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    return load_config(path, overrides)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle":
        names = sorted(ORACLES) if args.name == "all" else [args.name]
        for name in names:
            for label, value in ORACLES[name]():
                print(f"{name}\t{label}\t{value:.17g}")
        return EXIT_OK

    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error in {exc.field}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        sys.stdout.write(to_text(cfg))
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = run(cfg)
        if args.out:
            emit(report, args.format, args.out)
        else:
            sys.stdout.write(to_csv(report) if args.format == "csv" else to_json(report))
    except ReportIOError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any failure during the run maps to exit 3
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
