"""Single-rate transmission over a block-fading link."""

from dataclasses import dataclass
from typing import overload

from channel import LN2, rate_for_success_prob, success_prob
from config import RATE_CAP_PROBABILITY
from numerics import FloatArray, lambert_w


@dataclass(frozen=True, slots=True)
class FixedRateOptimum:
    rate: float
    throughput: float


@overload
def fixed_rate_throughput(rate: float, power: float, sigma2: float) -> float: ...
@overload
def fixed_rate_throughput(
    rate: FloatArray, power: float, sigma2: float
) -> FloatArray: ...
def fixed_rate_throughput(
    rate: float | FloatArray, power: float, sigma2: float
) -> float | FloatArray:
    """Average delivered rate R * P(decode) when always sending at rate R."""
    return rate * success_prob(rate, power, sigma2)


def fixed_rate_optimum(power: float, sigma2: float) -> FixedRateOptimum:
    """Best single rate, R* = W(P sigma2) / (2 ln 2), and its throughput."""
    rate = lambert_w(power * sigma2) / (2.0 * LN2)
    return FixedRateOptimum(
        rate=rate, throughput=fixed_rate_throughput(rate, power, sigma2)
    )


def rate_cap(power: float, sigma2: float) -> float:
    """Upper end of rate line searches: past it the link is practically dead."""
    return rate_for_success_prob(RATE_CAP_PROBABILITY, power, sigma2)
