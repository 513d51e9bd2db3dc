import math
from collections.abc import Callable

import numpy as np
import pytest
from scipy.integrate import quad

from channel import Link, NodeConfig, ergodic_capacity_csir, success_prob
from netmodel import (
    Cut,
    CutEnumerationError,
    CutError,
    GraphValidationError,
    NetworkGraph,
    RateAssignment,
    capacity_upper_bound,
    cut_value,
    cutset_rate_fixed,
    enumerate_cuts,
    spread_ratio,
    theorem2_gap_constant,
)
from ptp import fixed_rate_optimum, fixed_rate_throughput, rate_cap

Diamond = Callable[[float], NetworkGraph]


# Graph validation


def _graph(**overrides: object) -> NetworkGraph:
    fields: dict[str, object] = {
        "nodes": (NodeConfig("s", 1.0), NodeConfig("a", 1.0), NodeConfig("d", 1.0)),
        "links": (Link("s", "a", 1.0), Link("a", "d", 1.0)),
        "source": "s",
        "destinations": ("d",),
    }
    fields.update(overrides)
    return NetworkGraph(**fields)  # type: ignore[arg-type]


@pytest.mark.parametrize(
    ("overrides", "element"),
    [
        ({"nodes": (NodeConfig("s", 1.0), NodeConfig("s", 2.0))}, "nodes.1.id"),
        ({"links": (Link("s", "a", 1.0), Link("a", "x", 1.0))}, "links.1.to"),
        (
            {"links": (Link("s", "a", 1.0), Link("s", "a", 0.5), Link("a", "d", 1.0))},
            "links.1",
        ),
        ({"source": "x"}, "source"),
        ({"destinations": ()}, "destinations"),
        ({"destinations": ("d", "d")}, "destinations"),
        ({"destinations": ("s",)}, "destinations.0"),
        (
            {"links": (Link("s", "a", 1.0), Link("a", "d", 1.0), Link("d", "s", 1.0))},
            "links",
        ),
        ({"links": (Link("s", "a", 1.0), Link("d", "a", 1.0))}, "destinations.0"),
    ],
    ids=[
        "duplicate-node",
        "unknown-endpoint",
        "duplicate-link",
        "unknown-source",
        "no-destination",
        "repeated-destination",
        "source-as-destination",
        "cycle",
        "unreachable-destination",
    ],
)
def test_graph_validation(overrides: dict[str, object], element: str) -> None:
    with pytest.raises(GraphValidationError) as excinfo:
        _graph(**overrides)
    assert excinfo.value.element == element


def test_unreachable_destination_is_named() -> None:
    with pytest.raises(GraphValidationError, match="'d'"):
        _graph(links=(Link("s", "a", 1.0), Link("d", "a", 1.0)))


def test_graph_helpers(diamond: Diamond) -> None:
    graph = diamond(10.0)
    assert graph.topological_order == ("s", "r1", "r2", "d")
    assert graph.transmitters == ("s", "r1", "r2")
    assert graph.out_neighbors("s") == ("r1", "r2")
    assert [link.sender for link in graph.in_links("d")] == ["r1", "r2"]
    assert graph.link("r1", "d").sigma2 == 1.0
    with pytest.raises(KeyError):
        graph.link("d", "r1")
    assert graph.can_reach("r1", "d") and not graph.can_reach("r1", "r2")
    assert {graph.power(n) for n in graph.with_uniform_power(3.0).node_ids} == {3.0}
    extended = graph.with_link(Link("r1", "r2", 0.5))
    assert extended.out_neighbors("r1") == ("d", "r2")
    assert set(graph.to_digraph().edges) == {link.key for link in graph.links}


# Cuts


def test_enumerate_cuts_single_link(single_link: Callable[[float], NetworkGraph]) -> None:
    cuts = enumerate_cuts(single_link(1.0))
    assert cuts == [Cut(source_side=frozenset({"s"}), boundary=frozenset({"s"}))]


def test_enumerate_cuts_diamond(diamond: Diamond) -> None:
    cuts = enumerate_cuts(diamond(10.0))
    sides = {cut.source_side for cut in cuts}
    assert sides == {
        frozenset({"s"}),
        frozenset({"s", "r1"}),
        frozenset({"s", "r2"}),
        frozenset({"s", "r1", "r2"}),
    }
    by_side = {cut.source_side: cut.boundary for cut in cuts}
    assert by_side[frozenset({"s", "r1"})] == {"s", "r1"}
    assert by_side[frozenset({"s", "r1", "r2"})] == {"r1", "r2"}


def test_enumerate_cuts_chain(chain: NetworkGraph) -> None:
    assert [cut.label() for cut in enumerate_cuts(chain)] == ["{s}", "{a,s}"]


def test_enumerate_cuts_size_guard(make_graph) -> None:
    names = [f"v{i:02d}" for i in range(30)]
    links = [(a, b, 1.0) for a, b in zip(names, names[1:])]
    graph = make_graph(links, source="v00", destinations=("v29",))
    with pytest.raises(CutEnumerationError) as excinfo:
        enumerate_cuts(graph)
    assert excinfo.value.node_count == 30
    assert "net optimize" in str(excinfo.value)


def test_cut_value_single_link(single_link: Callable[[float], NetworkGraph]) -> None:
    graph = single_link(4.0)
    (cut,) = enumerate_cuts(graph)
    value = cut_value(cut, RateAssignment(rates={"s": 0.9}), graph)
    assert value == pytest.approx(fixed_rate_throughput(0.9, 4.0, 1.0), rel=1e-12)


def test_cut_value_diamond_source_cut(diamond: Diamond) -> None:
    graph = diamond(1.0)
    cut = Cut(source_side=frozenset({"s"}), boundary=frozenset({"s"}))
    rates = RateAssignment(rates={"s": 0.5, "r1": 0.5, "r2": 0.5})
    expected = 0.5 * (1.0 - (1.0 - math.exp(-1.0)) ** 2)
    assert cut_value(cut, rates, graph) == pytest.approx(expected, rel=1e-12)
    assert cut_value(cut, rates, graph) == pytest.approx(0.300, abs=1e-3)

    gains = np.random.default_rng(17).exponential(1.0, (2, 1_000_000))
    reached = np.any(0.5 * np.log2(1.0 + gains) >= 0.5, axis=0)
    samples = 0.5 * reached
    stderr = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - expected) < 4 * stderr


def test_cut_value_reduces_to_fixed_rate_terms(diamond: Diamond) -> None:
    graph = diamond(10.0)
    cut = next(c for c in enumerate_cuts(graph) if c.source_side == {"s", "r1"})
    rates = RateAssignment(rates={"s": 1.2, "r1": 0.9, "r2": 0.7})
    assert cut_value(cut, rates, graph) == pytest.approx(
        fixed_rate_throughput(1.2, 10.0, 1.0) + fixed_rate_throughput(0.9, 10.0, 1.0),
        rel=1e-12,
    )


def test_cut_value_with_time_sharing(single_link: Callable[[float], NetworkGraph]) -> None:
    graph = single_link(10.0)
    (cut,) = enumerate_cuts(graph)
    mixed = RateAssignment(rates={"s": 0.6}, mixtures={"s": ((0.0, 0.5), (1.2, 0.5))})
    assert cut_value(cut, mixed, graph) == pytest.approx(
        0.5 * fixed_rate_throughput(1.2, 10.0, 1.0)
    )


def test_cut_value_errors(diamond: Diamond) -> None:
    graph = diamond(10.0)
    rates = RateAssignment(rates={"s": 1.0, "r1": 1.0, "r2": 1.0})
    with pytest.raises(CutError):
        cut_value(Cut(frozenset({"s"}), frozenset()), rates, graph)
    with pytest.raises(CutError):
        cut_value(Cut(frozenset({"s"}), frozenset({"s"})), RateAssignment({"r1": 1.0}), graph)
    with pytest.raises(CutError):
        RateAssignment(rates={"s": -1.0})
    with pytest.raises(CutError):
        RateAssignment(rates={"s": 1.0}, mixtures={"s": ((1.0, 0.3),)})


# Cut-set rate


def test_cutset_rate_single_link(single_link: Callable[[float], NetworkGraph]) -> None:
    result = cutset_rate_fixed(single_link(10.0))
    optimum = fixed_rate_optimum(10.0, 1.0)
    assert result.rate == pytest.approx(optimum.throughput, abs=1e-9)
    assert result.assignment.rates["s"] == pytest.approx(optimum.rate, abs=1e-4)


def _diamond_grid_oracle(power: float) -> float:
    """Max over (R_s, R_r) of the minimum of the four diamond cuts, relays
    sharing one rate.
    """
    cap = rate_cap(power, 1.0)
    rs = np.linspace(0.0, cap, 801)[:, None]
    rr = np.linspace(0.0, cap, 801)[None, :]
    ps, pr = success_prob(rs, power, 1.0), success_prob(rr, power, 1.0)
    source = rs * (1.0 - (1.0 - ps) ** 2)
    mixed = rs * ps + rr * pr
    relays = 2.0 * rr * pr
    return float(np.max(np.minimum(np.minimum(source, mixed), relays)))


def test_cutset_rate_diamond_matches_grid_oracle(diamond: Diamond) -> None:
    result = cutset_rate_fixed(diamond(10.0))
    oracle = _diamond_grid_oracle(10.0)
    assert result.rate == pytest.approx(oracle, rel=0.01)
    assert result.rate == pytest.approx(1.12, abs=0.01)
    assert result.binding_cut.source_side == {"s"}
    assert len(result.cut_values) == 4
    assert min(value for _, value in result.cut_values) == result.rate


def test_cutset_rate_is_deterministic(diamond: Diamond) -> None:
    first = cutset_rate_fixed(diamond(3.0), grid=64, seed=5)
    second = cutset_rate_fixed(diamond(3.0), grid=64, seed=5)
    assert first == second


def test_adding_a_link_never_lowers_the_cutset_rate(random_dags) -> None:
    rng = np.random.default_rng(23)
    for graph in random_dags(8, 6, 4):
        missing = [
            (a, b)
            for i, a in enumerate(graph.node_ids)
            for b in graph.node_ids[i + 1 :]
            if (a, b) not in {link.key for link in graph.links}
        ]
        if not missing:
            continue
        sender, receiver = missing[int(rng.integers(len(missing)))]
        before = cutset_rate_fixed(graph, grid=64, restarts=1)
        extended = graph.with_link(Link(sender, receiver, float(rng.uniform(0.2, 1.0))))
        after = cutset_rate_fixed(
            extended, grid=64, restarts=1, initial=before.assignment.rates
        )
        assert after.rate >= before.rate - 1e-7


# Upper bound


def test_upper_bound_single_link(single_link: Callable[[float], NetworkGraph]) -> None:
    bound = capacity_upper_bound(single_link(10.0), 200_000, seed=1)
    assert abs(bound.value - ergodic_capacity_csir(10.0, 1.0)) < 4 * bound.stderr
    assert len(bound.per_cut) == 1


def test_upper_bound_diamond_matches_erlang_quadrature(diamond: Diamond) -> None:
    """The source cut sees h1 + h2 ~ Erlang(2), density x exp(-x)."""
    bound = capacity_upper_bound(diamond(10.0), 200_000, seed=2)
    source_cut, _ = quad(
        lambda x: 0.5 * math.log2(1.0 + 10.0 * x) * x * math.exp(-x), 0.0, math.inf
    )
    assert bound.per_cut[0].cut.source_side == {"s"}
    assert abs(bound.value - source_cut) < 4 * bound.stderr


@pytest.mark.parametrize("power", [1.0, 10.0, 100.0], ids=lambda p: f"P={p:g}")
def test_upper_bound_dominates_cutset_rate(diamond: Diamond, power: float) -> None:
    bound = capacity_upper_bound(diamond(power), seed=3)
    assert cutset_rate_fixed(diamond(power), grid=128).rate <= bound.value + 3 * bound.stderr


def test_upper_bound_monotone_in_power(diamond: Diamond) -> None:
    low = capacity_upper_bound(diamond(5.0), 20_000, seed=9)
    high = capacity_upper_bound(diamond(10.0), 20_000, seed=9)
    assert high.value >= low.value
    for a, b in zip(low.per_cut, high.per_cut):
        assert b.mean >= a.mean


def test_upper_bound_needs_enough_samples(diamond: Diamond) -> None:
    with pytest.raises(ValueError):
        capacity_upper_bound(diamond(10.0), 1_000)


def test_gap_trend_over_power(diamond: Diamond) -> None:
    """The gap to the upper bound grows with P while the ratio falls toward 1."""
    ratios, gaps = [], []
    for power in (1.0, 10.0, 100.0, 1e3, 1e4):
        rate = cutset_rate_fixed(diamond(power), grid=128).rate
        bound = capacity_upper_bound(diamond(power), 50_000, seed=4)
        ratios.append(bound.value / rate)
        gaps.append(bound.value - rate)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert all(a < b for a, b in zip(gaps, gaps[1:]))
    assert ratios[-1] > 1.0


# Gap constant


def test_theorem2_constant_diamond(diamond: Diamond) -> None:
    assert spread_ratio(diamond(10.0)) == 1.0
    assert theorem2_gap_constant(diamond(10.0)) == pytest.approx(7.0352)


def test_theorem2_constant_spread(make_graph) -> None:
    equal = make_graph([("s", "a", 1.0), ("s", "b", 1.0), ("a", "d", 1.0), ("b", "d", 1.0)])
    spread = make_graph([("s", "a", 1.0), ("s", "b", 0.25), ("a", "d", 1.0), ("b", "d", 1.0)])
    assert spread_ratio(spread) == 4.0
    assert theorem2_gap_constant(spread) - theorem2_gap_constant(equal) == pytest.approx(
        0.5 * 1 * 4 * 2
    )
