"""Predicates that define subgraph patterns for the pattern task.

A pattern is a deterministic predicate over (current subgraph, the same node
set in a later graph, node types). A sample is labeled positive when the
predicate holds. Built-ins: "densify" (edge count rises by more than a
threshold) and "new_cross_type_edge" (an edge between differently typed
nodes appears). Extra predicates can be registered by name.
"""

from __future__ import annotations

import numpy as np

from sgevo.graph import InducedSubgraph

_REGISTRY = {}


def register_pattern(kind: str, factory) -> None:
    """Register ``factory(**params) -> predicate`` under ``kind``.

    The predicate signature is ``fn(before, after, node_types) -> bool``.
    """
    if kind in _REGISTRY:
        raise ValueError(f"pattern kind {kind!r} already registered")
    _REGISTRY[kind] = factory


class Pattern:
    """A named predicate with its parameters, built via :func:`make_pattern`."""

    def __init__(self, kind: str, fn, params: dict):
        self.kind = kind
        self._fn = fn
        self.params = dict(params)

    def evaluate(self, before: InducedSubgraph, after: InducedSubgraph,
                 node_types=None) -> bool:
        if not np.array_equal(before.nodes, after.nodes):
            raise ValueError("pattern inputs must share one node set")
        return bool(self._fn(before, after, node_types))

    def __repr__(self):
        return f"Pattern(kind={self.kind!r}, params={self.params})"


def _densify(threshold: int = 0):
    def fn(before, after, node_types):
        return after.edge_count() > before.edge_count() + threshold
    return fn


def _new_cross_type_edge():
    def fn(before, after, node_types):
        if node_types is None:
            raise ValueError("new_cross_type_edge needs node types")
        types = np.asarray(node_types)
        new = (after.adjacency > 0) & (before.adjacency == 0)
        cross = types[:, None] != types[None, :]
        return bool(np.any(np.triu(new & cross, k=1)))
    return fn


register_pattern("densify", _densify)
register_pattern("new_cross_type_edge", _new_cross_type_edge)


def make_pattern(kind: str, **params) -> Pattern:
    """Instantiate a registered pattern; unknown kinds raise."""
    if kind not in _REGISTRY:
        raise ValueError(f"unknown pattern kind {kind!r}; "
                         f"known: {sorted(_REGISTRY)}")
    return Pattern(kind, _REGISTRY[kind](**params), params)
