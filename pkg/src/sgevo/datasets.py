"""Synthetic temporal graphs with known evolution rules.

Two generators: a triadic-closure graph (disjoint communities that close
every open wedge each step, minus a small random edge removal) used for
learnability checks, and a periodic-blocks graph (typed six-node blocks
where the active half grows new cross-type edges in the late windows) used
for heterogeneous pattern tests. Each snapshot's full edge set is emitted
with an integer timestamp equal to the snapshot index, so splitting into T
windows recovers the construction exactly.
"""

from __future__ import annotations

import numpy as np

from sgevo.graph import TemporalGraph


def _close_wedges(adj: dict) -> set:
    """All node pairs completing an open wedge (common neighbor, no edge)."""
    new = set()
    for w, neigh in adj.items():
        members = sorted(neigh)
        for ii in range(len(members)):
            for jj in range(ii + 1, len(members)):
                u, v = members[ii], members[jj]
                if v not in adj[u]:
                    new.add((u, v))
    return new


def make_triadic_closure(num_nodes: int = 500, T: int = 6, seed: int = 0,
                         removal: float = 0.05,
                         community_sizes=(4, 5, 6)) -> TemporalGraph:
    """Communities evolving by wedge closure with random edge dropout.

    Nodes are split into disjoint communities (sizes drawn from
    ``community_sizes``); snapshot 1 holds a random spanning tree per
    community. Each later snapshot closes every open wedge of the previous
    one, then removes a ``removal`` fraction of edges uniformly. Communities
    never connect, so cross-community edges are impossible: the learnable
    rule is "same community" plus dropout noise.
    """
    if num_nodes < 20:
        raise ValueError("need at least 20 nodes")
    if T < 3:
        raise ValueError("need at least 3 snapshots")
    rng = np.random.default_rng(seed)
    communities = []
    start = 0
    while start < num_nodes:
        size = int(rng.choice(community_sizes))
        size = min(size, num_nodes - start)
        if size < 3:
            communities[-1].extend(range(start, start + size))
        else:
            communities.append(list(range(start, start + size)))
        start += size

    edges = set()
    for comm in communities:
        order = list(rng.permutation(comm))
        for i in range(1, len(order)):
            u = int(order[i])
            v = int(order[int(rng.integers(i))])
            edges.add((min(u, v), max(u, v)))

    src, dst, ts = [], [], []
    for t in range(T):
        for u, v in sorted(edges):
            src.append(u)
            dst.append(v)
            ts.append(t)
        if t == T - 1:
            break
        edges = edges | _close_wedges(_adj(edges, num_nodes))
        drop = int(round(removal * len(edges)))
        if drop:
            pool = sorted(edges)
            out = rng.choice(len(pool), size=drop, replace=False)
            edges = edges - {pool[i] for i in out}

    weight = np.ones(len(src))
    return TemporalGraph(np.array(src), np.array(dst), weight,
                         np.array(ts, dtype=np.float64), num_nodes=num_nodes)


def _adj(edges: set, num_nodes: int) -> dict:
    adj = {n: set() for n in range(num_nodes)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def make_periodic_blocks(blocks: int = 60, T: int = 10, seed: int = 0,
                         active_fraction: float = 0.5) -> TemporalGraph:
    """Typed blocks whose active half gains cross-type edges on schedule.

    Each block has three type-0 nodes (a1..a3) and three type-1 nodes
    (b1..b3), carrying both within-type triangles in every window. A random
    ``active_fraction`` of blocks additionally carries exactly one
    cross-type edge per window: (a1, b1) during the first 70% of windows,
    then a rotating new pair, (a2, b2), (a3, b3), back to (a1, b1), in the
    last 30%. Inactive blocks never gain cross edges, so "new cross-type
    edge appears" / "edge count grows" hold exactly for node sets covering
    a late pair of an active block. Every window has the same edge count,
    putting the 70% edge-count split exactly on the window boundary.
    """
    if blocks < 4:
        raise ValueError("need at least 4 blocks")
    if T < 3:
        raise ValueError("need at least 3 snapshots")
    rng = np.random.default_rng(seed)
    n_active = int(round(active_fraction * blocks))
    active = np.zeros(blocks, dtype=bool)
    active[rng.choice(blocks, size=n_active, replace=False)] = True
    cut = int(np.ceil(0.7 * T))
    late_pairs = [(1, 1), (2, 2), (0, 0)]

    src, dst, ts, types = [], [], [], np.zeros(6 * blocks, dtype=np.int64)
    for blk in range(blocks):
        a = [6 * blk + i for i in range(3)]
        b = [6 * blk + 3 + i for i in range(3)]
        types[b] = 1
    for t in range(T):
        for blk in range(blocks):
            a = [6 * blk + i for i in range(3)]
            b = [6 * blk + 3 + i for i in range(3)]
            for grp in (a, b):
                for i in range(3):
                    for j in range(i + 1, 3):
                        src.append(grp[i])
                        dst.append(grp[j])
                        ts.append(t)
            if active[blk]:
                if t < cut:
                    i, j = 0, 0
                else:
                    i, j = late_pairs[(t - cut) % len(late_pairs)]
                src.append(a[i])
                dst.append(b[j])
                ts.append(t)

    weight = np.ones(len(src))
    return TemporalGraph(np.array(src), np.array(dst), weight,
                         np.array(ts, dtype=np.float64),
                         num_nodes=6 * blocks, node_types=types)


def generate_synthetic(kind: str, nodes: int, T: int, seed: int = 0) -> TemporalGraph:
    """Dispatch by kind: "triadic_closure" or "periodic_blocks"."""
    if kind == "triadic_closure":
        return make_triadic_closure(num_nodes=nodes, T=T, seed=seed)
    if kind == "periodic_blocks":
        return make_periodic_blocks(blocks=max(4, nodes // 6), T=T, seed=seed)
    raise ValueError(f"unknown synthetic kind {kind!r}")
