"""Helpers shared by the sub-commands: exit statuses, graph loading and
deterministic CSV/JSON output.
"""

import argparse
import csv
import io
import logging
import shlex
from collections.abc import Iterable, Sequence
from pathlib import Path

from pydantic import BaseModel

from config import APP_NAME, APP_VERSION
from netmodel import NetworkGraph
from schemas import parse_graph

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3

CsvValue = str | int | float | None


class UsageError(Exception):
    """Raised for missing, conflicting or out-of-range flags."""


def read_graph(path: Path) -> NetworkGraph:
    """Load and validate a graph file. Raises `UsageError` when the file
    cannot be read and `GraphValidationError` when its content is invalid.
    """
    try:
        text = path.read_bytes()
    except OSError as e:
        raise UsageError(f"Cannot read graph file {path}: {e.strerror}") from e
    graph = parse_graph(text)
    logger.info(
        "loaded %s: %d nodes, %d links, %d destinations",
        path,
        len(graph.nodes),
        len(graph.links),
        len(graph.destinations),
    )
    return graph


def invocation(args: argparse.Namespace) -> str:
    return shlex.join([APP_NAME, *args.argv])


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise UsageError(f"Cannot write {path}: {e.strerror}") from e
    logger.info("wrote %s", path)


def _csv_cell(value: CsvValue) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path: Path,
    args: argparse.Namespace,
    header: Sequence[str],
    rows: Iterable[Sequence[CsvValue]],
    notes: Sequence[str] = (),
) -> None:
    """Write a CSV preceded by `#` comment lines: the tool version with the
    full invocation, then any `notes`.
    """
    buffer = io.StringIO()
    buffer.write(f"# {APP_NAME} {APP_VERSION} {invocation(args)}\n")
    for note in notes:
        buffer.write(f"# {note}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_csv_cell(value) for value in row] for row in rows)
    _write_text(path, buffer.getvalue())


def write_json(path: Path, document: BaseModel) -> None:
    _write_text(path, document.model_dump_json(indent=2, by_alias=True) + "\n")


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value
