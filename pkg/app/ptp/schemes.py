"""Registry of the point-to-point schemes compared in rate sweeps."""

from collections.abc import Iterable
from enum import Enum

from channel import ergodic_capacity_csir, waterfilling_capacity
from ptp.fixed_rate import fixed_rate_optimum
from ptp.marginal import infinite_layer_throughput
from ptp.superposition import optimize_two_layer


class Scheme(Enum):
    """Schemes available to `ptp-sweep`, in CSV column order.

    Each member carries 3 values:
    * slug: name used on the command line.
    * column: CSV column header.
    * label: legend label for plots.
    """

    ONE_RATE = ("one-rate", "one_rate", "CSIR, One Rate")
    TWO_RATE = ("two-rate", "two_rate", "CSIR, Two Rates")
    INFINITE_RATE = ("infinite-rate", "infinite_rate", "CSIR, Infinite Rates")
    CSIR_CAPACITY = ("csir-capacity", "csir_capacity", "CSIR, Capacity")
    CSIRT_WATERFILLING = (
        "csirt-waterfilling",
        "csirt_waterfilling",
        "CSIRT, Waterfilling",
    )

    def __init__(self, slug: str, column: str, label: str) -> None:
        self.slug = slug
        self.column = column
        self.label = label

    def evaluate(self, power: float, sigma2: float) -> float:
        """Average rate of the scheme at transmit power `power`."""
        match self:
            case Scheme.ONE_RATE:
                return fixed_rate_optimum(power, sigma2).throughput
            case Scheme.TWO_RATE:
                return optimize_two_layer(power, sigma2).throughput
            case Scheme.INFINITE_RATE:
                return infinite_layer_throughput(power, sigma2)
            case Scheme.CSIR_CAPACITY:
                return ergodic_capacity_csir(power, sigma2)
            case Scheme.CSIRT_WATERFILLING:
                return waterfilling_capacity(power, sigma2)


def get_scheme(slug: str) -> Scheme:
    """Return the scheme with the given slug. Raises a `KeyError` if the slug
    is not registered.
    """
    for scheme in Scheme:
        if scheme.slug == slug:
            return scheme
    raise KeyError(slug)


def parse_schemes(slugs: Iterable[str]) -> tuple[Scheme, ...]:
    """Resolve slugs to schemes, de-duplicated and in registry order."""
    chosen = {get_scheme(slug.strip()) for slug in slugs if slug.strip()}
    return tuple(scheme for scheme in Scheme if scheme in chosen)
