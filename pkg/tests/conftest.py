"""Shared pytest configuration and network fixtures."""

import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

# Since the application runs with app/ as its source root (`python app/main.py`),
# the app/ directory must be added to the Python search path.
# By resolving the path of app/ from this file's location, the tests
# import the application's modules the same way regardless of the runner's
# working directory.
APP_DIR = Path(__file__).resolve().parent.parent / "app"
if str(APP_DIR) not in sys.path:
    sys.path.insert(0, str(APP_DIR))

from channel import Link, NodeConfig  # noqa: E402
from netmodel import NetworkGraph  # noqa: E402

GRAPHS_DIR = APP_DIR / "graphs"

GraphFactory = Callable[..., NetworkGraph]


def build_graph(
    links: list[tuple[str, str, float]],
    power: float = 10.0,
    source: str = "s",
    destinations: tuple[str, ...] = ("d",),
) -> NetworkGraph:
    names = sorted({name for s, r, _ in links for name in (s, r)})
    return NetworkGraph(
        nodes=tuple(NodeConfig(name, power) for name in names),
        links=tuple(Link(s, r, sigma2) for s, r, sigma2 in links),
        source=source,
        destinations=destinations,
    )


@pytest.fixture
def make_graph() -> GraphFactory:
    return build_graph


@pytest.fixture
def diamond() -> Callable[[float], NetworkGraph]:
    """s -> {r1, r2} -> d with unit gain variances, every node at power P."""

    def make(power: float = 10.0) -> NetworkGraph:
        return build_graph(
            [("s", "r1", 1.0), ("s", "r2", 1.0), ("r1", "d", 1.0), ("r2", "d", 1.0)],
            power=power,
        )

    return make


@pytest.fixture
def single_link() -> Callable[[float], NetworkGraph]:
    def make(power: float = 10.0) -> NetworkGraph:
        return build_graph([("s", "d", 1.0)], power=power)

    return make


@pytest.fixture
def chain() -> NetworkGraph:
    return build_graph([("s", "a", 1.0), ("a", "d", 1.0)])


def random_dag(rng: np.random.Generator, max_nodes: int) -> NetworkGraph:
    """Random DAG on nodes n0 (source) ... n{k-1} (destination) with edges
    only from lower to higher index; a spine n0 -> n1 -> ... keeps the
    destination reachable.
    """
    count = int(rng.integers(3, max_nodes + 1))
    names = [f"n{i}" for i in range(count)]
    links = []
    for i in range(count):
        for j in range(i + 1, count):
            if j == i + 1 or rng.random() < 0.5:
                links.append((names[i], names[j], float(rng.uniform(0.2, 1.0))))
    powers = rng.uniform(0.5, 20.0, size=count)
    return NetworkGraph(
        nodes=tuple(NodeConfig(name, float(p)) for name, p in zip(names, powers)),
        links=tuple(Link(s, r, sigma2) for s, r, sigma2 in links),
        source=names[0],
        destinations=(names[-1],),
    )


@pytest.fixture
def random_dags() -> Callable[[int, int, int], list[NetworkGraph]]:
    """`random_dags(count, max_nodes, seed)` draws reproducible random DAGs."""

    def make(count: int, max_nodes: int, seed: int) -> list[NetworkGraph]:
        rng = np.random.default_rng(seed)
        return [random_dag(rng, max_nodes) for _ in range(count)]

    return make
