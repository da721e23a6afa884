import numpy as np
import pytest

from bivirus.graph import Graph


def random_connected_graph(rng: np.random.Generator, n: int, p: float = 0.3, weighted: bool = False) -> Graph:
    """Random spanning tree plus extra Erdos-Renyi edges; always connected."""
    edges = {}
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = int(order[k]), int(order[rng.integers(k)])
        edges[(min(i, j), max(i, j))] = 1.0
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p:
                edges[(i, j)] = 1.0
    if weighted:
        edges = {e: float(rng.uniform(0.2, 2.0)) for e in edges}
    return Graph(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
