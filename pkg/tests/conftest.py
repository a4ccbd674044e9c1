import numpy as np
import pytest

from sgevo import SubgraphSampler, induced_subgraph, make_triadic_closure, split_snapshots

from oracles import snapshot_from_edges


@pytest.fixture(scope="session")
def path_snapshot():
    """A 5-node path 0-1-2-3-4 with unit weights."""
    return snapshot_from_edges([(0, 1), (1, 2), (2, 3), (3, 4)], 5)


@pytest.fixture(scope="session")
def wedge_snapshot():
    """Weighted wedge: 0-1 (w=2), 1-2 (w=1), plus isolated node 3."""
    return snapshot_from_edges([(0, 1), (1, 2)], 4, weights=[2.0, 1.0])


@pytest.fixture(scope="session")
def small_graph():
    return make_triadic_closure(num_nodes=40, T=3, seed=7)


@pytest.fixture(scope="session")
def small_pairs(small_graph):
    snaps = split_snapshots(small_graph, 3)
    sampler = SubgraphSampler(k=5, alpha=0.05, seed=11)
    return snaps, sampler.sample_pairs(snaps[0], snaps[1], 6)


def random_snapshot(rng, num_nodes, edge_prob=0.4, max_weight=3.0):
    """Random connected-ish weighted snapshot for property tests."""
    edges, weights = [], []
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            if rng.random() < edge_prob:
                edges.append((i, j))
                weights.append(float(rng.integers(1, int(max_weight) + 1)))
    if not edges:
        edges, weights = [(0, 1)], [1.0]
    return snapshot_from_edges(edges, num_nodes, weights)


def random_subgraph(rng, snapshot, n):
    nodes = rng.choice(snapshot.num_nodes, size=n, replace=False)
    return induced_subgraph(snapshot, np.sort(nodes))
