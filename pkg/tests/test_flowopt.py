import itertools
import logging
from collections.abc import Callable

import numpy as np
import pytest

from flowopt import (
    DualState,
    DualStateError,
    Priorities,
    SolverOptions,
    SolverOptionsError,
    StepMode,
    assign_flows,
    conservation_shortfall,
    delivered_rate,
    max_flow_lp,
    neighbor_priorities,
    polymatroid_capacity,
    rate_objective,
    select_rate,
    solve,
    update_duals,
    update_source_rate,
)
from netmodel import (
    NetworkGraph,
    RateAssignment,
    cut_value,
    cutset_rate_fixed,
    enumerate_cuts,
)
from ptp import fixed_rate_optimum, rate_cap

Diamond = Callable[[float], NetworkGraph]


# Broadcast polymatroid


def test_queue_priorities_give_polymatroid_vertices(random_dags) -> None:
    """Along the queue-derived order every prefix is tight and every subset
    of neighbors stays feasible.
    """
    rng = np.random.default_rng(11)
    for graph in random_dags(30, 6, 21):
        dest = graph.destinations[0]
        state = DualState(
            queues={
                (node, dest): float(rng.uniform(0.0, 3.0))
                for node in graph.node_ids
                if node != dest
            }
        )
        for node in graph.transmitters:
            order = neighbor_priorities(state, node, dest, graph).order
            sigma2 = max(link.sigma2 for link in graph.out_links(node))
            rate = float(rng.uniform(0.0, 2.0 * rate_cap(graph.power(node), sigma2)))
            flows = assign_flows(graph, node, rate, order)
            for k in range(1, len(order) + 1):
                prefix = order[:k]
                assert sum(flows[j] for j in prefix) == pytest.approx(
                    polymatroid_capacity(graph, node, rate, prefix), abs=1e-12
                )
            for size in range(1, len(order) + 1):
                for subset in itertools.combinations(order, size):
                    assert sum(flows[j] for j in subset) <= (
                        polymatroid_capacity(graph, node, rate, subset) + 1e-12
                    )


def test_silent_node_sends_nothing(make_graph) -> None:
    graph = make_graph([("s", "a", 1.0), ("s", "d", 1.0), ("a", "d", 1.0)])
    assert assign_flows(graph, "s", 0.0, ("a", "d")) == {"a": 0.0, "d": 0.0}


def test_rate_objective_matches_weighted_flows(diamond: Diamond) -> None:
    graph = diamond(10.0)
    priorities = (Priorities(("r2", "r1"), (1.5, 0.25)),)
    rates = np.array([0.3, 1.1, 2.0])
    values = rate_objective(graph, "s", priorities, rates)
    for rate, value in zip(rates, values):
        flows = assign_flows(graph, "s", float(rate), ("r2", "r1"))
        assert value == pytest.approx(1.5 * flows["r2"] + 0.25 * flows["r1"], rel=1e-12)


def test_max_flow_lp_equals_min_cut(random_dags) -> None:
    rng = np.random.default_rng(5)
    for graph in random_dags(20, 5, 13):
        assignment = RateAssignment(
            rates={node: float(rng.uniform(0.05, 2.0)) for node in graph.transmitters}
        )
        min_cut = min(cut_value(cut, assignment, graph) for cut in enumerate_cuts(graph))
        assert max_flow_lp(graph, assignment) == pytest.approx(min_cut, abs=1e-6)


# Dual variables


def test_dual_state_validation() -> None:
    with pytest.raises(DualStateError):
        DualState(queues={("s", "d"): -0.1})
    with pytest.raises(DualStateError):
        DualState(queues={("d", "d"): 1.0})
    assert DualState(queues={}).queue("a", "d") == 0.0


def test_source_rate_update(chain: NetworkGraph) -> None:
    empty = DualState.initial(chain)
    assert update_source_rate(0.0, empty, 0.5, chain) == 0.5
    backlogged = DualState(queues={("s", "d"): 3.0})
    assert update_source_rate(0.0, backlogged, 0.5, chain) == 0.0
    assert update_source_rate(2.0, backlogged, 0.5, chain) == 1.0
    with pytest.raises(ValueError):
        update_source_rate(0.0, empty, 0.0, chain)


def test_dual_update(chain: NetworkGraph) -> None:
    flows = {("s", "a", "d"): 0.4, ("a", "d", "d"): 0.3}
    state = update_duals(DualState.initial(chain), flows, 0.5, 1.0, chain)
    assert state.queue("s", "d") == pytest.approx(0.1)
    assert state.queue("a", "d") == pytest.approx(0.1)
    assert state.queue("d", "d") == 0.0
    assert state.iteration == 1
    drained = update_duals(state, {("s", "a", "d"): 5.0}, 0.0, 1.0, chain)
    assert drained.queue("s", "d") == 0.0
    with pytest.raises(ValueError):
        update_duals(state, flows, 0.5, -1.0, chain)


def test_neighbor_priorities(diamond: Diamond) -> None:
    graph = diamond(10.0)
    state = DualState(queues={("s", "d"): 2.0, ("r1", "d"): 0.5, ("r2", "d"): 1.0})
    assert neighbor_priorities(state, "s", "d", graph) == Priorities(
        ("r1", "r2"), (1.5, 1.0)
    )
    flat = DualState(queues={("r1", "d"): 1.0, ("r2", "d"): 1.0})
    assert neighbor_priorities(flat, "s", "d", graph) == Priorities(
        ("r1", "r2"), (0.0, 0.0)
    )


def test_select_rate(single_link: Callable[[float], NetworkGraph]) -> None:
    graph = single_link(10.0)
    assert select_rate(graph, "s", DualState.initial(graph)) == 0.0
    backlogged = DualState(queues={("s", "d"): 1.0})
    assert select_rate(graph, "s", backlogged) == pytest.approx(
        fixed_rate_optimum(10.0, 1.0).rate, abs=1e-3
    )


# Solver


@pytest.mark.parametrize(
    "options",
    [
        {"max_iters": 0},
        {"gamma0": -1.0},
        {"eta0": 0.0},
        {"averaging_window": 0.0},
        {"averaging_window": 1.5},
        {"rate_grid": 2},
        {"tolerance": 0.0},
        {"trace_every": -1},
    ],
    ids=str,
)
def test_solver_options_validation(options: dict[str, float]) -> None:
    with pytest.raises(SolverOptionsError):
        SolverOptions(**options)  # type: ignore[arg-type]


def test_step_sizes() -> None:
    assert SolverOptions().step_sizes(4, 1) == pytest.approx((1.0, 1.0))
    assert SolverOptions().step_sizes(1, 2) == pytest.approx((1.0, 1.0))
    constant = SolverOptions(step_mode=StepMode.CONSTANT, gamma0=0.1, eta0=0.3)
    assert constant.step_sizes(100, 1) == pytest.approx((0.1, 0.3))


def test_delivered_rate_ignores_relay_surplus(diamond: Diamond) -> None:
    graph = diamond(10.0)
    flows = {
        ("s", "r1", "d"): 0.4,
        ("s", "r2", "d"): 0.3,
        ("r1", "d", "d"): 0.6,
        ("r2", "d", "d"): 0.2,
    }
    assert delivered_rate(graph, flows) == pytest.approx(0.6)
    assert conservation_shortfall(graph, flows, 0.6) == pytest.approx(
        {("s", "d"): 0.0, ("r1", "d"): 0.0, ("r2", "d"): 0.1}
    )
    short = conservation_shortfall(graph, flows, 1.0)
    assert short[("s", "d")] == pytest.approx(0.3)


def test_delivered_rate_is_the_worst_destination(make_graph) -> None:
    graph = make_graph([("s", "a", 1.0), ("s", "b", 1.0)], destinations=("a", "b"))
    flows = {("s", "a", "a"): 0.7, ("s", "b", "b"): 0.5}
    assert delivered_rate(graph, flows) == pytest.approx(0.5)
    assert conservation_shortfall(graph, flows, 0.5) == pytest.approx(
        {("s", "a"): 0.0, ("b", "a"): 0.0, ("s", "b"): 0.0, ("a", "b"): 0.0}
    )


def test_single_link_rate_is_carried_by_the_link(
    single_link: Callable[[float], NetworkGraph],
) -> None:
    solution = solve(single_link(10.0), SolverOptions(early_stop=False))
    assert solution.iterations == 20_000
    assert solution.multicast_rate <= solution.flows[("s", "d", "d")] + 1e-12
    assert solution.multicast_rate == pytest.approx(
        fixed_rate_optimum(10.0, 1.0).throughput, rel=0.01
    )
    assert solution.converged
    assert solution.max_residual < 1e-3


@pytest.mark.parametrize("power", [1.0, 10.0, 100.0], ids=lambda p: f"P={p:g}")
def test_solve_diamond_matches_cutset_rate(diamond: Diamond, power: float) -> None:
    graph = diamond(power)
    solution = solve(graph, SolverOptions(early_stop=False))
    assert solution.multicast_rate == pytest.approx(
        cutset_rate_fixed(graph).rate, rel=0.01
    )


def test_solve_diamond_converges_with_defaults(diamond: Diamond) -> None:
    graph = diamond(10.0)
    solution = solve(graph)
    assert solution.converged
    assert 10_000 <= solution.iterations <= 20_000
    assert solution.max_residual < 1e-3
    assert solution.multicast_rate == pytest.approx(
        cutset_rate_fixed(graph).rate, rel=0.01
    )


def test_solve_chain_matches_single_link(chain: NetworkGraph) -> None:
    solution = solve(chain, SolverOptions(early_stop=False))
    assert solution.multicast_rate == pytest.approx(
        fixed_rate_optimum(10.0, 1.0).throughput, rel=0.01
    )
    assert solution.iterations == 20_000


def test_solution_is_consistent(diamond: Diamond) -> None:
    graph = diamond(10.0)
    solution = solve(graph, SolverOptions(max_iters=5_000, early_stop=False))
    assert set(solution.node_rates) == {"s", "r1", "r2"}
    for node, atoms in solution.rate_mixtures.items():
        assert sum(w for _, w in atoms) == pytest.approx(1.0)
        assert solution.active_rates()[node] > 0
    assert solution.priorities[("s", "d")] in {("r1", "r2"), ("r2", "r1")}
    assert all(value >= 0 for value in solution.flows.values())
    assert all(value >= 0 for value in solution.residuals.values())
    assert ("d", "d") not in solution.residuals
    assert solution.duals.queue("d", "d") == 0.0
    assert solution.multicast_rate <= delivered_rate(graph, solution.flows) + 1e-12
    lp = max_flow_lp(graph, solution.assignment())
    assert solution.multicast_rate <= lp + 0.01


def test_solver_is_deterministic(diamond: Diamond) -> None:
    opts = SolverOptions(max_iters=2_000)
    first, second = solve(diamond(10.0), opts), solve(diamond(10.0), opts)
    assert first.multicast_rate == second.multicast_rate
    assert first.flows == second.flows


def test_trailing_average_settles(diamond: Diamond) -> None:
    solution = solve(diamond(10.0), SolverOptions(early_stop=False, trace_every=100))
    assert len(solution.trace) == 200
    tail = np.array([point.averaged_rate for point in solution.trace[-20:]])
    assert tail.std() < 0.01 * tail.mean()


def test_early_stop_reports_convergence(diamond: Diamond) -> None:
    solution = solve(diamond(10.0), SolverOptions(tolerance=0.05))
    assert solution.converged
    assert 10_000 <= solution.iterations < 20_000
    assert solution.max_residual < 0.05


def test_undelivered_source_rate_is_not_convergence(diamond: Diamond, caplog) -> None:
    """After one step C is positive but nothing has been forwarded yet."""
    with caplog.at_level(logging.WARNING, logger="flowopt.solver"):
        solution = solve(diamond(10.0), SolverOptions(max_iters=1, tolerance=1.0))
    assert not solution.converged
    assert solution.iterations == 1
    assert solution.multicast_rate == 0.0
    assert solution.max_residual == 0.0
    assert solution.trace == ()
    assert "without converging" in caplog.text


def test_solve_multicast_broadcast(make_graph) -> None:
    """Both receivers must get every packet, so the rate is the one-link optimum."""
    graph = make_graph([("s", "a", 1.0), ("s", "b", 1.0)], destinations=("a", "b"))
    solution = solve(graph, SolverOptions(early_stop=False))
    assert solution.multicast_rate == pytest.approx(
        fixed_rate_optimum(10.0, 1.0).throughput, rel=0.03
    )
    assert solution.flows[("s", "b", "a")] == 0.0
