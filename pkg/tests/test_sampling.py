import numpy as np
import pytest

from sgevo import (
    SubgraphSampler,
    attention_matrix,
    draw_neighbor,
    induced_subgraph,
    load_pairs,
    make_triadic_closure,
    save_pairs,
    split_snapshots,
    transfer_probability,
)

from conftest import random_snapshot, random_subgraph
from oracles import path_matrix_by_enumeration, snapshot_from_edges


# ----- transfer probabilities ------------------------------------------------

def test_transfer_probability_weighted(wedge_snapshot):
    # node 1 has neighbors 0 (w=2) and 2 (w=1)
    assert transfer_probability(wedge_snapshot, 1, 0) == pytest.approx(2 / 3)
    assert transfer_probability(wedge_snapshot, 1, 2) == pytest.approx(1 / 3)
    assert transfer_probability(wedge_snapshot, 0, 1) == pytest.approx(1.0)


def test_transfer_probability_errors(wedge_snapshot):
    with pytest.raises(ValueError, match="no neighbors"):
        transfer_probability(wedge_snapshot, 3, 0)
    with pytest.raises(ValueError, match="not an edge"):
        transfer_probability(wedge_snapshot, 0, 2)


def test_transfer_probabilities_sum_to_one(path_snapshot):
    for v in range(5):
        nbrs = path_snapshot.neighbors(v)
        total = sum(transfer_probability(path_snapshot, v, int(u)) for u in nbrs)
        assert total == pytest.approx(1.0)


# ----- neighbor drawing ------------------------------------------------------

def test_draw_neighbor_respects_exclusion(wedge_snapshot):
    rng = np.random.default_rng(0)
    for _ in range(50):
        got = draw_neighbor(wedge_snapshot, 1, rng, exclude=np.array([0]))
        assert got == 2


def test_draw_neighbor_exhausted(wedge_snapshot):
    rng = np.random.default_rng(0)
    assert draw_neighbor(wedge_snapshot, 1, rng, exclude=np.array([0, 2])) == -1
    assert draw_neighbor(wedge_snapshot, 3, rng) == -1


def test_draw_neighbor_frequency_tracks_weights():
    snap = snapshot_from_edges([(0, 1), (0, 2), (0, 3)], 4, weights=[1.0, 2.0, 5.0])
    rng = np.random.default_rng(4)
    counts = np.zeros(4)
    n = 20_000
    for _ in range(n):
        counts[draw_neighbor(snap, 0, rng)] += 1
    assert counts[1] / n == pytest.approx(1 / 8, abs=0.01)
    assert counts[2] / n == pytest.approx(2 / 8, abs=0.01)
    assert counts[3] / n == pytest.approx(5 / 8, abs=0.015)


# ----- sampler ---------------------------------------------------------------

def test_sampler_validation():
    with pytest.raises(ValueError):
        SubgraphSampler(k=2, alpha=0.1, seed=0)
    with pytest.raises(ValueError):
        SubgraphSampler(k=5, alpha=1.5, seed=0)


def test_sample_sizes_within_bounds(small_pairs):
    _, pairs = small_pairs
    for pair in pairs:
        assert 3 <= pair.n <= 5
        assert len(set(pair.nodes.tolist())) == pair.n


def test_sampler_deterministic(small_graph):
    snaps = split_snapshots(small_graph, 3)
    runs = []
    for _ in range(2):
        sampler = SubgraphSampler(k=5, alpha=0.1, seed=42)
        pairs = sampler.sample_pairs(snaps[0], snaps[1], 10)
        runs.append([tuple(p.nodes.tolist()) for p in pairs])
    assert runs[0] == runs[1]


def test_sampler_thread_invariant(small_graph):
    snaps = split_snapshots(small_graph, 3)
    base = SubgraphSampler(k=5, alpha=0.1, seed=9).sample_pairs(
        snaps[0], snaps[1], 200, threads=1)
    multi = SubgraphSampler(k=5, alpha=0.1, seed=9).sample_pairs(
        snaps[0], snaps[1], 200, threads=4)
    for a, b in zip(base, multi):
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.attention, b.attention)


def test_sampler_fresh_draws_each_call(small_graph):
    snaps = split_snapshots(small_graph, 3)
    sampler = SubgraphSampler(k=5, alpha=0.1, seed=3)
    first = sampler.sample_pairs(snaps[0], snaps[1], 20)
    second = sampler.sample_pairs(snaps[0], snaps[1], 20)
    assert [tuple(p.nodes.tolist()) for p in first] != \
           [tuple(p.nodes.tolist()) for p in second]


def test_sampler_alpha_one_jumps_everywhere(small_graph):
    """With alpha=1 every step is a jump, so node sets are unconstrained
    uniform draws and frequently disconnected."""
    snaps = split_snapshots(small_graph, 3)
    sampler = SubgraphSampler(k=6, alpha=1.0, seed=5)
    pairs = sampler.sample_pairs(snaps[0], snaps[1], 100)
    from oracles import layered_connected
    frac = np.mean([layered_connected(p.before.binary()) for p in pairs])
    assert frac < 0.9


def test_sampler_empty_snapshot():
    from sgevo.graph import Snapshot
    none = Snapshot.from_edges(np.array([], dtype=np.int64),
                               np.array([], dtype=np.int64),
                               np.array([], dtype=np.float64), 4)
    sampler = SubgraphSampler(k=4, alpha=0.0, seed=0)
    with pytest.raises(ValueError, match="no edges"):
        sampler.sample_nodes(none, np.random.default_rng(0))


def test_pair_fields(small_pairs):
    snaps, pairs = small_pairs
    pair = pairs[0]
    assert pair.t == snaps[0].index
    assert pair.before.nodes is pair.nodes or np.array_equal(pair.before.nodes, pair.nodes)
    assert np.array_equal(pair.after.nodes, pair.nodes)
    assert pair.attention.shape == (pair.n, pair.n)


# ----- attention matrix ------------------------------------------------------

def test_attention_matrix_path(path_snapshot):
    sub = induced_subgraph(path_snapshot, np.array([0, 1, 2]))
    p = attention_matrix(sub, path_snapshot)
    # interior node 1 splits its global weight between nodes 0 and 2
    assert p[0, 1] == pytest.approx(1.0)
    assert p[0, 2] == pytest.approx(0.5)
    assert np.allclose(np.diag(p), 1.0)


def test_attention_matrix_unreachable(wedge_snapshot):
    sub = induced_subgraph(wedge_snapshot, np.array([0, 1, 3]))
    p = attention_matrix(sub, wedge_snapshot)
    assert p[0, 2] == 0.0
    assert p[2, 0] == 0.0
    assert p[2, 2] == 1.0


def test_attention_matrix_uses_global_weights():
    """Transfer steps are weighted by the full snapshot, not the subgraph."""
    snap = snapshot_from_edges([(0, 1), (1, 2), (1, 3)], 4)
    sub = induced_subgraph(snap, np.array([0, 1, 2]))
    p = attention_matrix(sub, snap)
    # node 1 has global strength 3, so the 1->2 step costs 1/3 even though
    # node 3 is outside the subgraph
    assert p[0, 2] == pytest.approx(1 / 3)


def test_attention_matrix_matches_enumeration_random():
    """Agreement with the explicit path-enumeration oracle on 250 random cases."""
    rng = np.random.default_rng(123)
    for _ in range(250):
        snap = random_snapshot(rng, int(rng.integers(4, 9)), edge_prob=0.45)
        n = int(rng.integers(2, min(6, snap.num_nodes + 1)))
        sub = random_subgraph(rng, snap, n)
        got = attention_matrix(sub, snap)
        want = path_matrix_by_enumeration(sub, snap)
        assert np.allclose(got, want, atol=1e-6), (sub.nodes, got, want)


def test_attention_matrix_entries_are_probabilities(small_pairs):
    _, pairs = small_pairs
    for pair in pairs:
        assert np.all(pair.attention >= 0.0)
        assert np.all(pair.attention <= 1.0 + 1e-12)


# ----- serialization ---------------------------------------------------------

def test_pairs_roundtrip(tmp_path, small_pairs):
    _, pairs = small_pairs
    path = tmp_path / "pairs.txt"
    save_pairs(pairs, path)
    back = load_pairs(path)
    assert len(back) == len(pairs)
    for a, b in zip(pairs, back):
        assert a.t == b.t
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.before.binary(), b.before.binary())
        assert np.array_equal(a.after.binary(), b.after.binary())
        assert np.array_equal(a.attention, b.attention)  # exact float round-trip


def test_pairs_file_rejects_garbage(tmp_path):
    p = tmp_path / "pairs.txt"
    p.write_text("not|a|valid|pair\n")
    with pytest.raises(ValueError):
        load_pairs(p)
