"""Temporal graph ingestion and snapshot views.

A temporal graph is an undirected multigraph whose edges carry timestamps
(and optional positive weights). It can be viewed either as a sequence of
discrete snapshots (equal-width time windows) or as a pair of continuous-time
graphs split at a timestamp quantile. Snapshots expose CSR adjacency with
accumulated edge weights, degrees, and induced subgraphs over small node sets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_CACHE_MAGIC = b"SGVG"
_CACHE_VERSION = 1


class TemporalGraph:
    """Edge list sorted by timestamp, with node ids remapped to 0..n-1.

    Node ids are dense after ingestion; ``original_ids[i]`` recovers the id
    that appeared in the source file. ``node_types`` is an optional int array
    (one entry per node) for heterogeneous graphs.
    """

    def __init__(self, src, dst, weight, time, num_nodes, original_ids=None,
                 node_types=None, self_loops_dropped=0):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.time = np.asarray(time, dtype=np.float64)
        self.num_nodes = int(num_nodes)
        if original_ids is None:
            original_ids = np.arange(self.num_nodes, dtype=np.int64)
        self.original_ids = np.asarray(original_ids, dtype=np.int64)
        self.node_types = None if node_types is None else np.asarray(node_types, dtype=np.int64)
        self.self_loops_dropped = int(self_loops_dropped)
        if not (len(self.src) == len(self.dst) == len(self.weight) == len(self.time)):
            raise ValueError("edge arrays must have equal length")
        if np.any(np.diff(self.time) < 0):
            raise ValueError("edges must be sorted by timestamp")

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def num_types(self) -> int:
        return 0 if self.node_types is None else int(self.node_types.max()) + 1

    @property
    def time_range(self):
        return float(self.time[0]), float(self.time[-1])

    def __repr__(self):
        return (f"TemporalGraph(nodes={self.num_nodes}, edges={self.num_edges}, "
                f"types={self.num_types or None})")


@dataclass(frozen=True)
class InducedSubgraph:
    """Adjacency of an ordered node set inside one snapshot.

    ``adjacency[i, j]`` holds the accumulated edge weight between
    ``nodes[i]`` and ``nodes[j]`` (0 when absent); it is symmetric with a
    zero diagonal. The node order is whatever the caller supplied.
    """

    nodes: np.ndarray
    adjacency: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)

    def binary(self) -> np.ndarray:
        return (self.adjacency > 0).astype(np.float64)

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))


class Snapshot:
    """One time window of a temporal graph, as a static undirected graph.

    The node universe is global (all ids of the parent graph), so a node may
    be isolated here. Parallel edges inside the window accumulate weight;
    degree counts distinct neighbors.
    """

    def __init__(self, index, num_nodes, indptr, indices, weights, window,
                 edge_slice, node_types=None):
        self.index = index
        self.num_nodes = num_nodes
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.window = window            # (t_start, t_end); last window closed right
        self.edge_slice = edge_slice    # slice into the parent edge arrays
        self.node_types = node_types
        self.degrees = np.diff(indptr)
        self.strengths = np.zeros(num_nodes, dtype=np.float64)
        np.add.at(self.strengths, np.repeat(np.arange(num_nodes), self.degrees), weights)

    @classmethod
    def from_edges(cls, src, dst, weight, num_nodes, index=1, window=(0.0, 0.0),
                   edge_slice=(0, 0), node_types=None):
        """Build CSR adjacency from an undirected edge list slice."""
        a = np.concatenate([src, dst])
        b = np.concatenate([dst, src])
        w = np.concatenate([weight, weight])
        order = np.lexsort((b, a))
        a, b, w = a[order], b[order], w[order]
        if len(a):
            new_group = np.empty(len(a), dtype=bool)
            new_group[0] = True
            new_group[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
            starts = np.flatnonzero(new_group)
            a, b = a[starts], b[starts]
            w = np.add.reduceat(w, starts)
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(indptr, a + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(index, num_nodes, indptr, b, w, window, edge_slice, node_types)

    @property
    def edge_count(self) -> int:
        """Number of distinct undirected edges."""
        return len(self.indices) // 2

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.num_nodes else 0

    def neighbors(self, v) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def neighbor_weights(self, v) -> np.ndarray:
        return self.weights[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v) -> int:
        if v < 0 or v >= self.num_nodes:
            raise IndexError(f"node {v} outside universe of {self.num_nodes} nodes")
        return int(self.degrees[v])

    def strength(self, v) -> float:
        """Total accumulated weight incident on v."""
        return float(self.strengths[v])

    def edge_weight(self, u, v) -> float:
        """Accumulated weight of edge (u, v), or 0.0 when absent."""
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        if i < len(row) and row[i] == v:
            return float(self.neighbor_weights(u)[i])
        return 0.0

    def has_edge(self, u, v) -> bool:
        return self.edge_weight(u, v) > 0.0

    def __repr__(self):
        return (f"Snapshot(index={self.index}, nodes={self.num_nodes}, "
                f"edges={self.edge_count}, window={self.window})")


def parse_edge_list(path, weighted: bool = False) -> TemporalGraph:
    """Parse a whitespace-separated temporal edge list.

    Each non-comment line is ``src dst timestamp`` or, with ``weighted``,
    ``src dst weight timestamp``. Lines starting with ``#`` and blank lines
    are ignored. Self-loops are dropped (counted), node ids are remapped to a
    dense 0..n-1 range, and edges are sorted by timestamp (stable).
    """
    ncols = 4 if weighted else 3
    srcs, dsts, weights, times = [], [], [], []
    loops = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != ncols:
                raise ValueError(
                    f"{path}:{lineno}: expected {ncols} fields, got {len(parts)}")
            try:
                u = int(parts[0])
                v = int(parts[1])
                w = float(parts[2]) if weighted else 1.0
                t = float(parts[3] if weighted else parts[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed value in {parts!r}") from None
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            if w <= 0:
                raise ValueError(f"{path}:{lineno}: edge weight must be positive")
            if t < 0:
                raise ValueError(f"{path}:{lineno}: negative timestamp")
            if u == v:
                loops += 1
                continue
            srcs.append(u)
            dsts.append(v)
            weights.append(w)
            times.append(t)
    if not srcs:
        raise ValueError(f"{path}: no edges found")
    src = np.array(srcs, dtype=np.int64)
    dst = np.array(dsts, dtype=np.int64)
    weight = np.array(weights, dtype=np.float64)
    time = np.array(times, dtype=np.float64)
    original_ids, inverse = np.unique(np.concatenate([src, dst]), return_inverse=True)
    src, dst = inverse[:len(src)], inverse[len(src):]
    order = np.argsort(time, kind="stable")
    return TemporalGraph(src[order], dst[order], weight[order], time[order],
                         num_nodes=len(original_ids), original_ids=original_ids,
                         self_loops_dropped=loops)


def load_node_types(path, graph: TemporalGraph) -> np.ndarray:
    """Read a ``node_id type_id`` sidecar and attach dense type ids.

    Node ids refer to the ids in the original edge list. Nodes missing from
    the file get type 0; type ids are remapped to 0..n_types-1 preserving
    numeric order. Returns the per-node type array (also set on the graph).
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            try:
                raw[int(parts[0])] = int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed value in {parts!r}") from None
    type_values = np.unique(np.array(sorted(set(raw.values())), dtype=np.int64))
    dense = {t: i for i, t in enumerate(type_values)}
    types = np.zeros(graph.num_nodes, dtype=np.int64)
    for i, orig in enumerate(graph.original_ids):
        if int(orig) in raw:
            types[i] = dense[raw[int(orig)]]
    graph.node_types = types
    return types


def split_snapshots(graph: TemporalGraph, T: int) -> list[Snapshot]:
    """Cut the time range into T equal-width windows and build snapshots.

    Windows are half-open ``[lo, hi)`` except the last, which is closed so
    the maximum timestamp belongs to snapshot T. Every snapshot shares the
    global node universe.
    """
    if graph.num_edges == 0:
        raise ValueError("graph has no edges")
    if T < 2:
        raise ValueError("need at least 2 snapshots")
    t_min, t_max = graph.time_range
    if t_min == t_max:
        raise ValueError("all edges share one timestamp; windows would be zero-width")
    width = (t_max - t_min) / T
    assigned = np.minimum(((graph.time - t_min) / width).astype(np.int64), T - 1)
    bounds = np.searchsorted(assigned, np.arange(T + 1))
    snapshots = []
    for t in range(T):
        lo, hi = int(bounds[t]), int(bounds[t + 1])
        snapshots.append(Snapshot.from_edges(
            graph.src[lo:hi], graph.dst[lo:hi], graph.weight[lo:hi],
            graph.num_nodes, index=t + 1,
            window=(t_min + t * width, t_min + (t + 1) * width),
            edge_slice=(lo, hi), node_types=graph.node_types))
    return snapshots


def split_continuous(graph: TemporalGraph, train_fraction: float = 0.7):
    """Split into two continuous-time views by edge order: first fraction
    of edges (by timestamp) versus the rest. Returns (earlier, later)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    cut = int(graph.num_edges * train_fraction)
    if cut == 0 or cut == graph.num_edges:
        raise ValueError("split leaves one side empty")
    views = []
    for lo, hi in ((0, cut), (cut, graph.num_edges)):
        views.append(Snapshot.from_edges(
            graph.src[lo:hi], graph.dst[lo:hi], graph.weight[lo:hi],
            graph.num_nodes, index=1 if lo == 0 else 2,
            window=(float(graph.time[lo]), float(graph.time[hi - 1])),
            edge_slice=(lo, hi), node_types=graph.node_types))
    return views[0], views[1]


def induced_subgraph(snapshot: Snapshot, nodes) -> InducedSubgraph:
    """Adjacency of ``nodes`` (order preserved) inside ``snapshot``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if len(np.unique(nodes)) != len(nodes):
        raise ValueError("duplicate node in subgraph node list")
    if len(nodes) == 0:
        raise ValueError("empty node list")
    if nodes.min() < 0 or nodes.max() >= snapshot.num_nodes:
        raise IndexError("node id outside snapshot universe")
    n = len(nodes)
    adj = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            w = snapshot.edge_weight(int(nodes[i]), int(nodes[j]))
            adj[i, j] = adj[j, i] = w
    return InducedSubgraph(nodes=nodes, adjacency=adj)


def save_graph_cache(graph: TemporalGraph, path) -> None:
    """Write a versioned binary cache for fast reload."""
    has_types = graph.node_types is not None
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<IQQQB", _CACHE_VERSION, graph.num_nodes,
                             graph.num_edges, graph.self_loops_dropped, int(has_types)))
        graph.original_ids.astype("<i8").tofile(fh)
        graph.src.astype("<i8").tofile(fh)
        graph.dst.astype("<i8").tofile(fh)
        graph.weight.astype("<f8").tofile(fh)
        graph.time.astype("<f8").tofile(fh)
        if has_types:
            graph.node_types.astype("<i8").tofile(fh)


def load_graph_cache(path) -> TemporalGraph:
    """Reload a cache written by :func:`save_graph_cache`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CACHE_MAGIC:
            raise ValueError(f"{path}: not a graph cache (bad magic {magic!r})")
        header = fh.read(struct.calcsize("<IQQQB"))
        version, num_nodes, num_edges, loops, has_types = struct.unpack("<IQQQB", header)
        if version != _CACHE_VERSION:
            raise ValueError(f"{path}: cache version {version} != {_CACHE_VERSION}")
        original_ids = np.fromfile(fh, dtype="<i8", count=num_nodes)
        src = np.fromfile(fh, dtype="<i8", count=num_edges)
        dst = np.fromfile(fh, dtype="<i8", count=num_edges)
        weight = np.fromfile(fh, dtype="<f8", count=num_edges)
        time = np.fromfile(fh, dtype="<f8", count=num_edges)
        types = np.fromfile(fh, dtype="<i8", count=num_nodes) if has_types else None
        if len(time) != num_edges or (has_types and len(types) != num_nodes):
            raise ValueError(f"{path}: truncated cache file")
    return TemporalGraph(src, dst, weight, time, num_nodes, original_ids,
                         node_types=types, self_loops_dropped=loops)
