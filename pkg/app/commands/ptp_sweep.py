"""`ptp-sweep`: average rate of each point-to-point scheme over an SNR grid."""

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from commands.common import (
    EXIT_OK,
    CsvValue,
    UsageError,
    positive_int,
    write_csv,
)
from ptp.schemes import Scheme, parse_schemes

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SweepSpec:
    snr_lo: float
    snr_hi: float
    points: int
    schemes: tuple[Scheme, ...]
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        if not self.snr_lo < self.snr_hi:
            raise UsageError(
                f"--snr-lo ({self.snr_lo}) must be below --snr-hi ({self.snr_hi})"
            )
        if self.points < 2:
            raise UsageError(f"--points must be at least 2, got {self.points}")
        if not self.schemes:
            raise UsageError("--schemes selects no scheme")
        if not 0 < self.sigma2 <= 1:
            raise UsageError(f"--sigma2 must lie in (0, 1], got {self.sigma2}")

    def snr_grid(self) -> list[float]:
        return [float(x) for x in np.linspace(self.snr_lo, self.snr_hi, self.points)]

    def power(self, snr_db: float) -> float:
        """snr_db = 10 log10(P * sigma2)."""
        return float(10.0 ** (snr_db / 10.0) / self.sigma2)


def _row(spec: SweepSpec, snr_db: float) -> list[CsvValue]:
    power = spec.power(snr_db)
    logger.info("sweep point %.6g dB", snr_db)
    return [snr_db, *(scheme.evaluate(power, spec.sigma2) for scheme in spec.schemes)]


def sweep_rows(spec: SweepSpec, jobs: int = 1) -> list[list[CsvValue]]:
    """One row per grid point, in grid order whatever the completion order."""
    grid = spec.snr_grid()
    if jobs == 1:
        return [_row(spec, snr_db) for snr_db in grid]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda snr_db: _row(spec, snr_db), grid))


def run(args: argparse.Namespace) -> int:
    try:
        schemes = parse_schemes(args.schemes.split(","))
    except KeyError as e:
        known = ", ".join(scheme.slug for scheme in Scheme)
        raise UsageError(f"Unknown scheme {e.args[0]!r}; choose from {known}") from e
    spec = SweepSpec(args.snr_lo, args.snr_hi, args.points, schemes, args.sigma2)
    write_csv(
        Path(args.out),
        args,
        ["snr_db", *(scheme.column for scheme in spec.schemes)],
        sweep_rows(spec, args.jobs),
        notes=[f"snr_db = 10*log10(P*sigma2), sigma2 = {spec.sigma2!r}"],
    )
    return EXIT_OK


def register(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    parser = subparsers.add_parser(
        "ptp-sweep", help="rates of the point-to-point schemes over an SNR range"
    )
    parser.add_argument("--snr-lo", type=float, default=-10.0, help="lowest SNR in dB")
    parser.add_argument("--snr-hi", type=float, default=30.0, help="highest SNR in dB")
    parser.add_argument("--points", type=int, default=41, help="grid points")
    parser.add_argument(
        "--schemes",
        default=",".join(scheme.slug for scheme in Scheme),
        help="comma-separated scheme slugs (default: all)",
    )
    parser.add_argument("--sigma2", type=float, default=1.0, help="gain variance")
    parser.add_argument("--jobs", type=positive_int, default=1, help="worker threads")
    parser.add_argument("--out", required=True, help="CSV file to write")
    parser.set_defaults(handler=run)

