"""``sensi`` command-line driver.

    sensi ingest|train|predict|morris|rank --config PATH
          [--age-group LABEL] [--seed N] [--absolute] [-v]

Exit codes: 0 ok, 1 runtime failure, 2 missing input, 3 data validation,
4 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from sensi import pipeline
from sensi.config import load_config
from sensi.errors import ConfigError, SensiError

EXIT_USAGE = ConfigError.exit_code

COMMANDS = {
    "ingest": pipeline.run_ingest,
    "train": pipeline.run_train,
    "predict": pipeline.run_predict,
    "morris": pipeline.run_morris,
    "rank": pipeline.run_rank,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sensi", description="Age-group sensitivity analysis of county case forecasts.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value run configuration")
    parser.add_argument("--age-group", help="restrict the command to one age group, e.g. 18-29")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--absolute", action="store_true", help="use absolute prediction changes in the Morris index")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed, absolute=args.absolute, age_group=args.age_group
        )
        COMMANDS[args.command](cfg)
    except SensiError as exc:
        print(f"sensi {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sensi {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
