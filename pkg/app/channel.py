"""Rayleigh block-fading link model: outage, erasure and the ergodic capacity
baselines of a single link.

Rates are in bits per real channel use, so a link with power gain h carries
at most 0.5 * log2(1 + h * P). The gain h is exponential with mean sigma2.
"""

import logging
import math
from dataclasses import dataclass
from typing import overload

import numpy as np
from scipy import optimize, special

from numerics import FloatArray, NumericsError, RealInterval, integrate

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
WATERFILLING_BRACKET = (1e-12, 1e12)
WATERFILLING_MAX_ITERS = 200
DEFAULT_CAPACITY_TOL = 1e-9


class ChannelParameterError(ValueError):
    """Raised when a rate, power or gain variance is out of range."""


@dataclass(frozen=True, slots=True)
class Link:
    """Directed wireless link. `sigma2` is the mean power gain."""

    sender: str
    receiver: str
    sigma2: float

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ChannelParameterError(f"Self loop on node {self.sender!r}")
        if not 0 < self.sigma2 <= 1:
            raise ChannelParameterError(
                f"Link {self.sender}->{self.receiver}: sigma2 must lie in (0, 1],"
                f" got {self.sigma2}"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.sender, self.receiver)


@dataclass(frozen=True, slots=True)
class NodeConfig:
    """A node and its transmit power (linear scale)."""

    id: str
    power: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.power) or self.power < 0:
            raise ChannelParameterError(
                f"Node {self.id!r}: power must be >= 0, got {self.power}"
            )


def _check_link_parameters(power: float, sigma2: float) -> None:
    if not power > 0:
        raise ChannelParameterError(f"Power must be positive, got {power}")
    if not sigma2 > 0:
        raise ChannelParameterError(f"sigma2 must be positive, got {sigma2}")


def _check_rates(rate: float | FloatArray) -> None:
    if np.any(np.asarray(rate) < 0):
        raise ChannelParameterError(f"Rates must be >= 0, got {rate}")


@overload
def snr_gap(rate: float) -> float: ...
@overload
def snr_gap(rate: FloatArray) -> FloatArray: ...
def snr_gap(rate: float | FloatArray) -> float | FloatArray:
    """2^(2R) - 1, the received SNR needed to carry rate R."""
    result = np.expm1(2.0 * LN2 * np.asarray(rate, dtype=np.float64))
    return float(result) if np.ndim(result) == 0 else result


@overload
def success_prob(rate: float, power: float, sigma2: float) -> float: ...
@overload
def success_prob(rate: FloatArray, power: float, sigma2: float) -> FloatArray: ...
def success_prob(
    rate: float | FloatArray, power: float, sigma2: float
) -> float | FloatArray:
    """Probability that a packet sent at `rate` is decoded:
    exp(-(2^(2R) - 1) / (P * sigma2)).
    """
    _check_link_parameters(power, sigma2)
    _check_rates(rate)
    result = np.exp(-snr_gap(np.asarray(rate, dtype=np.float64)) / (power * sigma2))
    return float(result) if np.ndim(result) == 0 else result


@overload
def erasure_prob(rate: float, power: float, sigma2: float) -> float: ...
@overload
def erasure_prob(rate: FloatArray, power: float, sigma2: float) -> FloatArray: ...
def erasure_prob(
    rate: float | FloatArray, power: float, sigma2: float
) -> float | FloatArray:
    """Outage probability 1 - success_prob, computed without cancellation."""
    _check_link_parameters(power, sigma2)
    _check_rates(rate)
    exponent = snr_gap(np.asarray(rate, dtype=np.float64)) / (power * sigma2)
    result = -np.expm1(-exponent)
    return float(result) if np.ndim(result) == 0 else result


def outage_threshold(rate: float, power: float) -> float:
    """Smallest power gain h that still supports `rate`."""
    if not power > 0:
        raise ChannelParameterError(f"Power must be positive, got {power}")
    _check_rates(rate)
    return snr_gap(rate) / power


def rate_for_success_prob(probability: float, power: float, sigma2: float) -> float:
    """Rate at which success_prob equals `probability` (0 < probability <= 1)."""
    _check_link_parameters(power, sigma2)
    if not 0 < probability <= 1:
        raise ChannelParameterError(f"Probability must lie in (0, 1], got {probability}")
    return math.log1p(power * sigma2 * -math.log(probability)) / (2.0 * LN2)


def broadcast_throughput(
    rate: float | FloatArray, power: float, sigma2s: tuple[float, ...]
) -> float | FloatArray:
    """R * (1 - prod_j eps_j(R)): rate delivered to at least one of the
    receivers with gain variances `sigma2s`. A silent node delivers 0.
    """
    rates = np.asarray(rate, dtype=np.float64)
    if power == 0 or not sigma2s:
        result = np.zeros_like(rates)
    else:
        missed = np.ones_like(rates)
        for sigma2 in sigma2s:
            missed = missed * erasure_prob(rates, power, sigma2)
        result = rates * (1.0 - missed)
    return float(result) if np.ndim(result) == 0 else result


def ergodic_capacity_csir(
    power: float, sigma2: float, tol: float = DEFAULT_CAPACITY_TOL
) -> float:
    """E[0.5 log2(1 + h P)], the capacity with receiver-only channel state."""
    if power < 0:
        raise ChannelParameterError(f"Power must be >= 0, got {power}")
    if power == 0:
        return 0.0
    if not sigma2 > 0:
        raise ChannelParameterError(f"sigma2 must be positive, got {sigma2}")

    def integrand(h: float) -> float:
        return 0.5 * math.log2(1.0 + h * power) * math.exp(-h / sigma2) / sigma2

    return integrate(
        integrand, RealInterval(0.0, math.inf), tol, decay_rate=1.0 / sigma2
    )


def _waterfilling_power(cutoff: float, sigma2: float) -> float:
    """Average power of p(h) = [1/cutoff - 1/h]+ under the exponential law."""
    x = cutoff / sigma2
    return float(math.exp(-x) / cutoff - special.exp1(x) / sigma2)


def waterfilling_capacity(
    power: float, sigma2: float, tol: float = DEFAULT_CAPACITY_TOL
) -> float:
    """Capacity with channel state at both ends: power is water-filled over
    the fading states, p(h) = [1/lambda - 1/h]+ with E[p(h)] = P.

    The cutoff lambda is found by bisection (on log scale) over
    WATERFILLING_BRACKET; the capacity is then E1(lambda / sigma2) / (2 ln 2).
    """
    _check_link_parameters(power, sigma2)
    lo, hi = (math.log(v) for v in WATERFILLING_BRACKET)
    try:
        log_cutoff = optimize.bisect(
            lambda t: _waterfilling_power(math.exp(t), sigma2) - power,
            lo,
            hi,
            xtol=1e-14,
            maxiter=WATERFILLING_MAX_ITERS,
        )
    except (RuntimeError, ValueError) as exc:
        raise NumericsError(f"Water level not found for P={power}") from exc

    cutoff = math.exp(log_cutoff)
    spent = _waterfilling_power(cutoff, sigma2)
    if abs(spent - power) > max(tol, 1e-9 * power):
        raise NumericsError(
            f"Water-filling power {spent} misses the budget {power} beyond tolerance"
        )
    logger.debug("water-filling cutoff %.6g for P=%g sigma2=%g", cutoff, power, sigma2)
    return float(special.exp1(cutoff / sigma2)) / (2.0 * LN2)
