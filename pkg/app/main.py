import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from .cli.commands import add_subcommands
from .errors import DenoiserError, UsageError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vdenoise",
        description="Self-supervised spatiotemporal denoising of low-SNR video.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Verbosity of the log lines written to stderr.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    add_subcommands(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Exit codes: 0 success, 2 usage error, 1 runtime failure."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DenoiserError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
