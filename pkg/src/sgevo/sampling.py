"""Weighted-walk subgraph sampling and path-probability attention.

A sampler draws node sets of size n ~ Uniform{3..k} from a snapshot: grow
from a uniform seed, at each step jumping to a uniform outside node with
probability alpha, otherwise extending from a uniform member node to one of
its outside neighbors drawn proportionally to edge weight. The same node set
is then read out of the next snapshot, giving an evolution pair. For each
pair we compute an attention matrix whose (i, j) entry is the probability of
reaching j from i through the subgraph's shortest-path DAG.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sgevo.graph import InducedSubgraph, Snapshot, induced_subgraph

_CHUNK = 128


@dataclass
class SubgraphPair:
    """A node set observed in two consecutive snapshots.

    ``before`` and ``after`` are induced subgraphs over the identical node
    order; ``attention`` is the n-by-n reachability-probability matrix
    computed on the earlier snapshot.
    """

    t: int
    nodes: np.ndarray
    before: InducedSubgraph
    after: InducedSubgraph
    attention: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)


def transfer_probability(snapshot: Snapshot, v_i: int, v_j: int) -> float:
    """Probability of stepping from v_i to its neighbor v_j.

    Equals the weight of (v_i, v_j) over the total weight incident on v_i;
    with unit weights this is 1/degree(v_i).
    """
    if snapshot.degree(v_i) == 0:
        raise ValueError(f"node {v_i} has no neighbors")
    w = snapshot.edge_weight(v_i, v_j)
    if w == 0.0:
        raise ValueError(f"({v_i}, {v_j}) is not an edge")
    return w / snapshot.strength(v_i)


def draw_neighbor(snapshot: Snapshot, v_i: int, rng, exclude=()) -> int:
    """Draw a neighbor of v_i proportionally to edge weight.

    Neighbors in ``exclude`` are removed and the remaining weights
    renormalized. Returns -1 when no admissible neighbor exists.
    """
    neigh = snapshot.neighbors(v_i)
    w = snapshot.neighbor_weights(v_i)
    if len(exclude):
        keep = ~np.isin(neigh, exclude)
        neigh, w = neigh[keep], w[keep]
    if len(neigh) == 0:
        return -1
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, rng.random() * cum[-1], side="right")
    return int(neigh[min(idx, len(neigh) - 1)])


class SubgraphSampler:
    """Samples subgraph evolution pairs from consecutive snapshots.

    Parameters
    ----------
    k : maximum subgraph size (n is uniform on {3..k})
    alpha : per-step probability of jumping to a uniform outside node
    seed : RNG seed; fixed seed gives byte-identical pairs, independent of
        the thread count
    max_retries : fresh-seed restarts allowed when growth stalls
    """

    def __init__(self, k: int = 10, alpha: float = 0.01, seed: int = 0,
                 max_retries: int = 1000):
        if k < 3:
            raise ValueError("k must be at least 3")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.k = int(k)
        self.alpha = float(alpha)
        self.seed = int(seed)
        self.max_retries = int(max_retries)
        self._calls = 0

    def sample_nodes(self, snapshot: Snapshot, rng) -> np.ndarray:
        """Grow one node set; resamples from a fresh seed when stuck."""
        if snapshot.max_degree == 0:
            raise ValueError("snapshot has no edges to sample from")
        for _ in range(self.max_retries):
            n = int(rng.integers(3, self.k + 1))
            nodes = self._grow(snapshot, n, rng)
            if nodes is not None:
                return np.array(nodes, dtype=np.int64)
        raise RuntimeError(f"sampling stalled {self.max_retries} times; "
                           "graph too small or too fragmented for k="
                           f"{self.k} with alpha={self.alpha}")

    def _grow(self, snapshot, n, rng):
        seed = int(rng.integers(snapshot.num_nodes))
        nodes = [seed]
        member = {seed}
        while len(nodes) < n:
            outside = snapshot.num_nodes - len(nodes)
            if rng.random() < self.alpha and outside > 0:
                nodes.append(self._jump(snapshot, member, rng))
                member.add(nodes[-1])
                continue
            extendable = [v for v in nodes
                          if len(member.intersection(snapshot.neighbors(v)))
                          < snapshot.degree(v)]
            if extendable:
                v_i = extendable[int(rng.integers(len(extendable)))]
                v_j = draw_neighbor(snapshot, v_i, rng,
                                    exclude=np.fromiter(member, dtype=np.int64))
                nodes.append(v_j)
                member.add(v_j)
            elif self.alpha > 0 and outside > 0:
                nodes.append(self._jump(snapshot, member, rng))
                member.add(nodes[-1])
            else:
                return None
        return nodes

    @staticmethod
    def _jump(snapshot, member, rng):
        pool = np.setdiff1d(np.arange(snapshot.num_nodes),
                            np.fromiter(member, dtype=np.int64))
        return int(pool[rng.integers(len(pool))])

    def sample_pair(self, snap_t: Snapshot, snap_t1: Snapshot, rng) -> SubgraphPair:
        nodes = self.sample_nodes(snap_t, rng)
        before = induced_subgraph(snap_t, nodes)
        after = induced_subgraph(snap_t1, nodes)
        attn = attention_matrix(before, snap_t)
        return SubgraphPair(t=snap_t.index, nodes=nodes, before=before,
                            after=after, attention=attn)

    def sample_pairs(self, snap_t: Snapshot, snap_t1: Snapshot, count: int,
                     threads: int = 1) -> list[SubgraphPair]:
        """Sample ``count`` pairs, deterministically.

        Work is cut into fixed-size chunks, each with its own RNG stream
        derived from (seed, call number, chunk index), so the result is
        invariant to ``threads``. Successive calls use fresh streams.
        """
        call = self._calls
        self._calls += 1
        n_chunks = (count + _CHUNK - 1) // _CHUNK
        sizes = [min(_CHUNK, count - i * _CHUNK) for i in range(n_chunks)]

        def run_chunk(i):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=self.seed, spawn_key=(call, i)))
            return [self.sample_pair(snap_t, snap_t1, rng) for _ in range(sizes[i])]

        if threads <= 1 or n_chunks <= 1:
            chunks = [run_chunk(i) for i in range(n_chunks)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(run_chunk, range(n_chunks)))
        return [p for chunk in chunks for p in chunk]


def _layered_dag(binary_adj: np.ndarray, source: int):
    """BFS depths from source plus the depth-increasing edge list."""
    n = len(binary_adj)
    depth = np.full(n, -1, dtype=np.int64)
    depth[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(binary_adj[u]):
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                queue.append(int(v))
    edges = [(u, v) for u in range(n) for v in np.flatnonzero(binary_adj[u])
             if depth[u] >= 0 and depth[v] == depth[u] + 1]
    return depth, edges


def attention_matrix(sg: InducedSubgraph, snapshot: Snapshot) -> np.ndarray:
    """Reachability-probability matrix P of a subgraph.

    For each ordered pair (i, j): take the BFS shortest-path DAG rooted at i
    (edges that increase depth by one), keep only nodes lying on some i-to-j
    path, and multiply, over every kept node v except i, the mean transfer
    probability from v's kept parents. P[i][i] = 1; unreachable pairs get 0.
    Step probabilities use the full snapshot's weights, not just the
    subgraph's.
    """
    n = sg.n
    binary = sg.binary()
    P = np.zeros((n, n), dtype=np.float64)
    # transfer probabilities for every subgraph edge, from global weights
    step = np.zeros((n, n), dtype=np.float64)
    for u in range(n):
        for v in np.flatnonzero(binary[u]):
            step[u, v] = transfer_probability(snapshot, int(sg.nodes[u]), int(sg.nodes[v]))
    for i in range(n):
        depth, edges = _layered_dag(binary, i)
        children = [[] for _ in range(n)]
        parents = [[] for _ in range(n)]
        for u, v in edges:
            children[u].append(v)
            parents[v].append(u)
        # forward reachability is just depth >= 0; backward reach per target
        for j in range(n):
            if j == i:
                P[i, j] = 1.0
                continue
            if depth[j] < 0:
                continue
            keep = np.zeros(n, dtype=bool)
            keep[j] = True
            stack = [j]
            while stack:
                v = stack.pop()
                for u in parents[v]:
                    if not keep[u]:
                        keep[u] = True
                        stack.append(u)
            prob = 1.0
            for v in range(n):
                if not keep[v] or v == i:
                    continue
                ps = [step[u, v] for u in parents[v] if keep[u]]
                prob *= sum(ps) / len(ps)
            P[i, j] = prob
    return P


def save_pairs(pairs, path) -> None:
    """Write pairs to a line-oriented text file.

    Each line: snapshot index, node list, flattened adjacency bits of the
    earlier and later subgraphs, flattened attention values, with sections
    separated by '|'. Floats use shortest round-trip formatting so a fixed
    sampler seed yields byte-identical files.
    """
    with open(path, "w") as fh:
        for p in pairs:
            cols = [str(p.t),
                    " ".join(str(int(v)) for v in p.nodes),
                    " ".join(str(int(b)) for b in p.before.binary().ravel()),
                    " ".join(str(int(b)) for b in p.after.binary().ravel()),
                    " ".join(format(x, ".17g") for x in p.attention.ravel())]
            fh.write("|".join(cols) + "\n")


def load_pairs(path) -> list[SubgraphPair]:
    """Reload pairs saved by :func:`save_pairs`.

    Adjacency comes back binary (weights are not serialized)."""
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("|")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 sections, got {len(parts)}")
            t = int(parts[0])
            nodes = np.array([int(tok) for tok in parts[1].split()], dtype=np.int64)
            n = len(nodes)
            before = np.array([float(tok) for tok in parts[2].split()]).reshape(n, n)
            after = np.array([float(tok) for tok in parts[3].split()]).reshape(n, n)
            attn = np.array([float(tok) for tok in parts[4].split()]).reshape(n, n)
            pairs.append(SubgraphPair(
                t=t, nodes=nodes,
                before=InducedSubgraph(nodes=nodes, adjacency=before),
                after=InducedSubgraph(nodes=nodes, adjacency=after),
                attention=attn))
    return pairs
