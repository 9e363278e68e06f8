import numpy as np
import pytest

from graphbc.experiments import SHIPPED, shipped_graph
from graphbc.graph import Graph

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def path_graph(n, w=0.25, mu=None, boundary=None, T=None):
    ids = [f"v{i}" for i in range(n)]
    mu = {v: 1.0 for v in ids} if mu is None else dict(zip(ids, mu))
    boundary = [ids[0], ids[-1]] if boundary is None else boundary
    edges = [(ids[i], ids[i + 1], w) for i in range(n - 1)]
    return Graph.from_edges(ids, edges, boundary, mu, T)


def p3(mu_b=1.0, boundary=("a", "c")):
    return Graph.from_edges(
        ["a", "b", "c"], [("a", "b", 0.25), ("b", "c", 0.25)], list(boundary), {"a": 1.0, "b": mu_b, "c": 1.0}, T=3
    )


def g2(boundary=("a",)):
    return Graph.from_edges(["a", "b"], [("a", "b", 0.5)], list(boundary), {"a": 1.0, "b": 1.0}, T=3)


def random_graph(n, rng, n_boundary=2, extra_edges=None, substochastic=True):
    """Connected random graph: random spanning tree plus extra edges; mu chosen so Assumption (ii) holds."""
    ids = [f"u{i}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(i))
        edges[(j, i)] = float(rng.uniform(0.1, 1.0))
    extra = int(rng.integers(0, n)) if extra_edges is None else extra_edges
    for _ in range(extra):
        i, j = sorted(rng.choice(n, 2, replace=False))
        edges.setdefault((int(i), int(j)), float(rng.uniform(0.1, 1.0)))
    deg = np.zeros(n)
    for (i, j), w in edges.items():
        deg[i] += w
        deg[j] += w
    mu = deg * rng.uniform(1.0, 2.0, n) if substochastic else rng.uniform(0.5, 2.0, n)
    boundary = [ids[b] for b in rng.choice(n, n_boundary, replace=False)]
    return Graph.from_edges(ids, [(ids[i], ids[j], w) for (i, j), w in edges.items()], boundary, dict(zip(ids, mu)))


@pytest.fixture(params=SHIPPED)
def shipped(request):
    return shipped_graph(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
