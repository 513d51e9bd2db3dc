import math

import numpy as np
import pytest
from scipy import special

from channel import (
    ChannelParameterError,
    Link,
    NodeConfig,
    broadcast_throughput,
    erasure_prob,
    ergodic_capacity_csir,
    outage_threshold,
    rate_for_success_prob,
    snr_gap,
    success_prob,
    waterfilling_capacity,
)
from numerics import lambert_w
from ptp import fixed_rate_optimum


@pytest.mark.parametrize(
    ("rate", "power", "sigma2", "expected"),
    [
        (0.0, 1.0, 1.0, 1.0),
        (0.5, 1.0, 1.0, math.exp(-1.0)),
        (30.0, 1.0, 1.0, 0.0),
    ],
    ids=["zero-rate", "half-bit", "dead-rate"],
)
def test_success_prob(rate: float, power: float, sigma2: float, expected: float) -> None:
    assert success_prob(rate, power, sigma2) == pytest.approx(expected, abs=1e-300)


def test_success_prob_monte_carlo() -> None:
    gains = np.random.default_rng(7).exponential(1.0, 1_000_000)
    decoded = 0.5 * np.log2(1.0 + gains) >= 0.5
    stderr = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / gains.size)
    assert abs(decoded.mean() - math.exp(-1.0)) < 4 * stderr


def test_success_prob_monotone() -> None:
    rates = np.linspace(0.0, 3.0, 50)
    probabilities = success_prob(rates, 10.0, 0.5)
    assert np.all(np.diff(probabilities) < 0)
    assert np.all((probabilities >= 0) & (probabilities <= 1))
    assert success_prob(1.0, 10.0, 0.5) < success_prob(1.0, 20.0, 0.5)
    assert success_prob(1.0, 10.0, 0.5) < success_prob(1.0, 10.0, 1.0)


def test_erasure_is_complement() -> None:
    rates = np.array([0.0, 1e-9, 0.3, 2.0])
    np.testing.assert_allclose(
        erasure_prob(rates, 4.0, 0.7) + success_prob(rates, 4.0, 0.7), 1.0
    )
    # No cancellation for tiny rates.
    assert erasure_prob(1e-12, 1.0, 1.0) == pytest.approx(2e-12 * math.log(2), rel=1e-6)


@pytest.mark.parametrize(
    "call",
    [
        lambda: success_prob(-0.1, 1.0, 1.0),
        lambda: success_prob(0.1, 0.0, 1.0),
        lambda: erasure_prob(0.1, 1.0, 0.0),
        lambda: Link("a", "b", 0.0),
        lambda: Link("a", "b", 1.5),
        lambda: Link("a", "a", 1.0),
        lambda: NodeConfig("a", -1.0),
    ],
    ids=[
        "negative-rate",
        "zero-power",
        "zero-variance",
        "dead-link",
        "variance-above-one",
        "self-loop",
        "negative-power",
    ],
)
def test_parameter_errors(call) -> None:
    with pytest.raises(ChannelParameterError):
        call()


def test_outage_threshold_and_inverse() -> None:
    assert outage_threshold(0.5, 2.0) == pytest.approx(snr_gap(0.5) / 2.0)
    assert snr_gap(0.5) == pytest.approx(1.0)
    rate = rate_for_success_prob(0.25, 10.0, 0.8)
    assert success_prob(rate, 10.0, 0.8) == pytest.approx(0.25, rel=1e-12)


def test_success_at_fixed_rate_optimum() -> None:
    """At R* = W(x) / (2 ln 2) the decode probability is exp(1/x - 1/W(x))."""
    for x in (0.1, 1.0, 10.0, 1000.0):
        optimum = fixed_rate_optimum(x, 1.0)
        expected = math.exp(1.0 / x - 1.0 / lambert_w(x))
        assert success_prob(optimum.rate, x, 1.0) == pytest.approx(expected, abs=1e-10)


def test_broadcast_throughput() -> None:
    expected = 0.5 * (1.0 - (1.0 - math.exp(-1.0)) ** 2)
    assert broadcast_throughput(0.5, 1.0, (1.0, 1.0)) == pytest.approx(expected)
    assert broadcast_throughput(0.5, 1.0, (1.0, 1.0)) == pytest.approx(0.300, abs=1e-3)
    assert broadcast_throughput(0.5, 0.0, (1.0,)) == 0.0
    assert broadcast_throughput(0.5, 1.0, ()) == 0.0


def test_ergodic_capacity() -> None:
    assert ergodic_capacity_csir(0.0, 1.0) == 0.0
    # E[0.5 log2(1 + hP)] = exp(1/P) E1(1/P) / (2 ln 2) for unit variance.
    expected = math.exp(0.1) * special.exp1(0.1) / (2.0 * math.log(2.0))
    assert ergodic_capacity_csir(10.0, 1.0) == pytest.approx(expected, abs=1e-9)
    assert ergodic_capacity_csir(10.0, 1.0) < ergodic_capacity_csir(20.0, 1.0)


def test_ergodic_capacity_monte_carlo() -> None:
    gains = np.random.default_rng(3).exponential(1.0, 1_000_000)
    samples = 0.5 * np.log2(1.0 + 10.0 * gains)
    stderr = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - ergodic_capacity_csir(10.0, 1.0)) < 4 * stderr


@pytest.mark.parametrize("power", [1.0, 10.0, 100.0], ids=lambda p: f"P={p:g}")
def test_waterfilling_dominates_constant_power(power: float) -> None:
    assert waterfilling_capacity(power, 1.0) >= ergodic_capacity_csir(power, 1.0)


def test_waterfilling_limits() -> None:
    assert waterfilling_capacity(1e-4, 1.0) < 1e-3
    low = waterfilling_capacity(10.0, 1.0) - ergodic_capacity_csir(10.0, 1.0)
    high = waterfilling_capacity(1e4, 1.0) - ergodic_capacity_csir(1e4, 1.0)
    assert 0 <= high < low
