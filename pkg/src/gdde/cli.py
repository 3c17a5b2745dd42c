"""Command line: ``gdde run|compare|list-problems|show-defaults``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ComparisonError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _cmd_run(args) -> int:
    from .harness import load_config, run_experiment

    cfg = load_config(args.config)
    out = args.out or f"results_{cfg.problem}"
    summary = run_experiment(cfg, out, workers=args.workers)
    for alg, s in summary["algorithms"].items():
        print(f"{alg:>10}  median {s['median']:.6g}  min {s['min']:.6g}  max {s['max']:.6g}")
    print(f"results written to {out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .harness import compare, format_comparison

    result = compare(args.directory)
    if args.json:
        print(json.dumps(result, indent=2, sort_keys=True))
    else:
        print(format_comparison(result))
    return EXIT_OK


def _cmd_list(args) -> int:
    from .benchmarks import BENCHMARKS
    from .reservoir import CASES, default_mode, make_case

    print("benchmarks (set dims in the config):")
    for name, b in BENCHMARKS.items():
        print(f"  {name:<12} box [-{b.half_width}, {b.half_width}]^d")
    print("reservoir cases:")
    for name in CASES:
        case, space = make_case(name)
        print(
            f"  {name:<12} {case.nx}x{case.ny} grid, {case.n_inj} inj + {case.n_prod} prod, "
            f"default mode {default_mode(name).value}, d={space.dims} "
            f"({space.n_integer} integer, {space.n_continuous} continuous)"
        )
    return EXIT_OK


def _cmd_defaults(args) -> int:
    from .harness import default_config_text

    sys.stdout.write(default_config_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gdde", description="GDDE experiment runner")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="result directory (default results_<problem>)")
    p.add_argument("--workers", type=int, default=1, help="parallel runs (default 1)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="checkpoint medians of a result directory")
    p.add_argument("directory")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.set_defaults(func=_cmd_compare)

    sub.add_parser("list-problems", help="list benchmarks and reservoir cases").set_defaults(func=_cmd_list)
    sub.add_parser("show-defaults", help="print a config with all defaults").set_defaults(func=_cmd_defaults)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComparisonError as exc:
        print(f"comparison error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
