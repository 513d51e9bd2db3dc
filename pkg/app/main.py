"""
fadenet - rate optimization for Rayleigh block-fading networks.
Composition root for the command-line tool.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import NoReturn

from commands import register_commands
from commands.common import EXIT_USAGE, EXIT_VALIDATION, UsageError
from config import APP_NAME, APP_VERSION, LOG_FORMAT, LOG_LEVEL
from netmodel import CutEnumerationError, GraphValidationError
from numerics import NumericsError

logger = logging.getLogger(__name__)


class CommandParser(argparse.ArgumentParser):
    """Argument parser that raises `UsageError` instead of exiting, so that
    every failure goes through the same exit-status mapping.
    """

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CommandParser:
    parser = CommandParser(prog=APP_NAME, description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument(
        "--log-level",
        default=LOG_LEVEL,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    register_commands(parser.add_subparsers(dest="command", required=True))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
        logger.info("%s %s: %s", APP_NAME, APP_VERSION, " ".join(argv))
        status: int = args.handler(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphValidationError, CutEnumerationError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericsError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"invalid parameter: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    logger.info("finished with status %d", status)
    return status


if __name__ == "__main__":
    sys.exit(main())
