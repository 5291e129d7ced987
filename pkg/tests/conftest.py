import numpy as np
import pytest

from grapde.graph import build_graph, generate


def random_connected(rng, n, p=0.4, lo=0.1, hi=2.0):
    """Random spanning tree plus extra edges, weights uniform in [lo, hi]."""
    edges = {}
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges[(min(a, b), max(a, b))] = rng.uniform(lo, hi)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p:
                edges[(i, j)] = rng.uniform(lo, hi)
    return build_graph([(i, j, w) for (i, j), w in edges.items()], n)


def graph_suite(max_n=30):
    """Generator families plus weighted random graphs, all connected."""
    rng = np.random.default_rng(7)
    suite = {
        "P2": generate("path", 2), "P7": generate("path", 7), "C4": generate("cycle", 4),
        "C9": generate("cycle", 9), "K3": generate("complete", 3), "K6": generate("complete", 6),
        "S5": generate("star", 5), "G3x4": generate("grid", 3, 4), "G5x6": generate("grid", 5, 6),
    }
    for n in (8, 15, max_n):
        suite[f"R{n}"] = random_connected(rng, n, p=min(0.3, 4 / n))
    return suite


@pytest.fixture(scope="session")
def suite():
    return graph_suite()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
