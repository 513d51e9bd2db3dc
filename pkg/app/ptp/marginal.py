"""Superposition with a continuum of virtual users.

The virtual user at interference level z (power still to be decoded below it)
carries r(z) dz bits. With u = 2 ln2 r(z), it is decoded when the gain h
satisfies h / (1 + h z) >= u, i.e. h >= u / (1 - u z) when u z < 1.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

from channel import LN2, ChannelParameterError, snr_gap
from config import INTEGRATION_TOL
from numerics import FloatArray, RealInterval, integrate
from ptp.superposition import LayeredScheme

# Below this value of sigma2 * z the closed form loses digits to cancellation.
SERIES_SWITCH = 1e-6
# Relative slack allowed when comparing neighbouring decode thresholds.
THRESHOLD_SLACK = 1e-12


class RateConvention(Enum):
    """Constant convention of the optimal marginal rate.

    * LITERAL: the closed form with prefactor 1 / (2 ln2 sigma2 z^2).
    * SELF_CONSISTENT: the maximizer of r * P(decode) under the decode rule of
      this module, exactly half of the literal value.
    """

    LITERAL = ("literal", 2.0)
    SELF_CONSISTENT = ("self-consistent", 1.0)

    def __init__(self, label: str, scale: float) -> None:
        self.label = label
        self.scale = scale


def optimal_marginal_rate(
    z: float | FloatArray,
    sigma2: float,
    convention: RateConvention = RateConvention.LITERAL,
) -> float | FloatArray:
    """Optimal marginal rate r*(z) (bits per channel use per unit power).

    Uses the rationalized root 2 sigma2 / (1 + 2a + sqrt(1 + 4a)), a = sigma2 z,
    of sigma2 z^2 u^2 - (1 + 2 sigma2 z) u + sigma2 = 0, and its series
    sigma2 (1 - 2a + 5a^2) for a < SERIES_SWITCH.
    """
    if not sigma2 > 0:
        raise ChannelParameterError(f"sigma2 must be positive, got {sigma2}")
    levels = np.asarray(z, dtype=np.float64)
    if np.any(levels < 0):
        raise ChannelParameterError("Interference levels must be >= 0")
    a = sigma2 * levels
    root = np.where(
        a < SERIES_SWITCH,
        sigma2 * (1.0 - 2.0 * a + 5.0 * a * a),
        2.0 * sigma2 / (1.0 + 2.0 * a + np.sqrt(1.0 + 4.0 * a)),
    )
    result = convention.scale * root / (2.0 * LN2)
    return float(result) if np.ndim(result) == 0 else result


def decode_threshold(r: float | FloatArray, z: float | FloatArray) -> FloatArray:
    """Gain needed to decode the virtual user at level z; +inf if none does."""
    u = 2.0 * LN2 * np.asarray(r, dtype=np.float64)
    uz = u * np.asarray(z, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(uz < 1.0, u / (1.0 - uz), np.inf)


def decode_probability(
    r: float | FloatArray, z: float | FloatArray, sigma2: float
) -> FloatArray:
    return np.exp(-decode_threshold(r, z) / sigma2)


@dataclass(frozen=True, slots=True)
class MarginalRateFn:
    """Marginal rate r(z) over interference levels.

    `discontinuities` lists levels where r jumps, so integrals can be split.
    """

    evaluator: Callable[[FloatArray], npt.ArrayLike]
    label: str = "custom"
    discontinuities: tuple[float, ...] = field(default=())

    def __call__(self, z: float | FloatArray) -> FloatArray:
        levels = np.asarray(z, dtype=np.float64)
        return np.broadcast_to(
            np.asarray(self.evaluator(levels), dtype=np.float64), levels.shape
        )

    @classmethod
    def fixed_rate(cls, rate: float, power: float) -> "MarginalRateFn":
        """Marginal of single-rate transmission: 1 / (2 ln2 (beta + z)),
        beta = P / (2^(2R) - 1), which integrates to R over [0, P].
        """
        gap = snr_gap(rate)
        if gap == 0:
            return cls(lambda z: np.zeros_like(z), label=f"fixed({rate})")
        beta = power / gap
        return cls(lambda z: 1.0 / (2.0 * LN2 * (beta + z)), label=f"fixed({rate})")

    @classmethod
    def optimal(
        cls, sigma2: float, convention: RateConvention = RateConvention.SELF_CONSISTENT
    ) -> "MarginalRateFn":
        return cls(
            lambda z: optimal_marginal_rate(z, sigma2, convention),
            label=f"optimal[{convention.label}]",
        )

    @classmethod
    def from_scheme(cls, scheme: LayeredScheme) -> "MarginalRateFn":
        """Piecewise marginal equivalent to a finite layered scheme."""
        inner = np.asarray(scheme.breakpoints[1:-1], dtype=np.float64)
        gaps = np.asarray([snr_gap(rate) for rate in scheme.layer_rates])
        inv_beta = gaps / scheme.power

        def evaluate(z: FloatArray) -> FloatArray:
            layer = np.searchsorted(inner, z, side="right")
            g = inv_beta[layer]
            return g / (2.0 * LN2 * (1.0 + g * z))

        return cls(
            evaluate,
            label=f"layered(K={scheme.layers})",
            discontinuities=tuple(scheme.breakpoints[1:-1]),
        )

    def segments(self, power: float) -> list[RealInterval]:
        cuts = [z for z in self.discontinuities if 0 < z < power]
        edges = [0.0, *cuts, power]
        return [RealInterval(lo, hi) for lo, hi in zip(edges, edges[1:]) if hi > lo]


def infinite_layer_throughput(
    power: float,
    sigma2: float,
    tol: float = INTEGRATION_TOL,
    marginal: MarginalRateFn | None = None,
) -> float:
    """Average rate of superposition over a continuum of layers:
    integral over [0, P] of r(z) * P(decode at z) dz.

    Defaults to the self-consistent optimal marginal.
    """
    if not power > 0:
        raise ChannelParameterError(f"Power must be positive, got {power}")
    rate_fn = marginal or MarginalRateFn.optimal(sigma2)

    def integrand(z: float) -> float:
        r = rate_fn(z)
        return float(r * decode_probability(r, z, sigma2))

    segments = rate_fn.segments(power)
    return math.fsum(integrate(integrand, seg, tol / len(segments)) for seg in segments)


def total_physical_rate(
    source: LayeredScheme | MarginalRateFn,
    power: float | None = None,
    tol: float = INTEGRATION_TOL,
) -> float:
    """Physical-layer rate summed over all layers (decoded or not)."""
    if isinstance(source, LayeredScheme):
        return math.fsum(source.physical_rates())
    if power is None or not power > 0:
        raise ChannelParameterError("A marginal rate function needs a positive power")
    segments = source.segments(power)
    return math.fsum(
        integrate(lambda z: float(source(z)), seg, tol / len(segments))
        for seg in segments
    )


def check_condition_a(
    marginal: MarginalRateFn, power: float, samples: int = 1000
) -> bool:
    """True when the decode threshold is non-increasing in z on a sample grid,
    so decoding a level implies decoding every level above it.
    """
    z = np.linspace(0.0, power, samples)
    r = marginal(z)
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        return False
    thresholds = decode_threshold(r, z)
    head, tail = thresholds[:-1], thresholds[1:]
    ok = np.isinf(head) | (tail <= head * (1.0 + THRESHOLD_SLACK))
    return bool(np.all(ok))
