"""Command-line scenario runner.

    savartsim <scenario> --config PATH [--seed N] [--out DIR] [--svg]

Exit codes: 0 success, 1 config/validation error, 2 runtime or fit
failure, 3 I/O error.
"""

import argparse
import logging
import sys

from .config import SCENARIOS, load_config
from .errors import ConfigError, FitFailure, InvalidArgument
from .scenarios import RUNNERS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("savartsim")


def build_parser():
    parser = argparse.ArgumentParser(prog="savartsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--svg", action="store_true", help="also render SVG figures")
    return parser


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.scenario)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer")
            cfg.scenario.seed = args.seed
        if args.out is not None:
            cfg.scenario.output_directory = args.out
    except (ConfigError, InvalidArgument) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO

    out_dir = cfg.scenario.output_directory
    try:
        result = RUNNERS[args.scenario](cfg, out_dir, svg=args.svg)
    except OSError as exc:
        print(f"I/O error writing to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitFailure, InvalidArgument, ArithmeticError) as exc:
        print(f"{args.scenario} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    stdout.write(result.text())
    for path in result.files:
        log.info("wrote %s", path)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
