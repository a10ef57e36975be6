"""``cvk`` command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 optimization did not converge.
"""

import argparse
import json
import logging
import sys

from . import experiments
from .config import ConfigError, build_scan, load
from .gaussian import PairingError
from .optomech import PRESETS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOT_CONVERGED = 0, 2, 3, 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI-style config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named experiment preset")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--out", help="output directory (overrides output.dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="Krotov-optimize the detuning towards a two-mode squeezed CM")
    _common(p)

    p = sub.add_parser("propagate", help="propagate a field (closed, or open when a bath is configured)")
    _common(p)
    p.add_argument("--field", help="two-column (t, f) CSV; default is the constant guess")

    p = sub.add_parser("scan", help="two-parameter scan")
    _common(p)
    p.add_argument("--resolution", type=int, help="points per axis (overrides axis counts)")
    p.add_argument("--threads", type=int, help="worker threads (default: CVK_THREADS or CPU count)")

    p = sub.add_parser("spectrum", help="cosine-transform amplitudes of a field file")
    p.add_argument("field", help="two-column (t, f) CSV")
    p.add_argument("--out", default=".", help="output directory")
    return parser


def run(args) -> int:
    if args.command == "spectrum":
        summary = experiments.run_spectrum(args.field, args.out)
        print(json.dumps(summary))
        return EXIT_OK

    cfg, scan_items, preset = load(args.preset, args.config, args.set, args.out)
    if args.command == "optimize":
        summary = experiments.run_optimize(cfg)
    elif args.command == "propagate":
        summary = experiments.run_propagate(cfg, args.field)
    else:
        spec = build_scan(cfg, scan_items, preset, args.resolution)
        summary = experiments.run_scan(spec, args.threads)
    print(json.dumps(summary))
    if args.command == "optimize" and not summary["converged"]:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, PairingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
