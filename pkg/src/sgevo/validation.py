"""Small input-validation helpers shared by configs, estimators, and the CLI."""

from __future__ import annotations

import numbers


def check_int(name: str, value, lo=None, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if lo is not None and value < lo:
        raise ValueError(f"{name} must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ValueError(f"{name} must be <= {hi}, got {value}")
    return value


def check_positive(name: str, value) -> float:
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def check_in(name: str, value, options) -> None:
    if value not in options:
        raise ValueError(f"{name} must be one of {sorted(options)}, got {value!r}")


def check_node_sets(node_sets, num_nodes: int, k: int):
    """Validate a list of node-id lists against a universe size and max size."""
    cleaned = []
    for i, nodes in enumerate(node_sets):
        nodes = [check_int(f"node_sets[{i}][{j}]", v, lo=0, hi=num_nodes - 1)
                 for j, v in enumerate(nodes)]
        if not 1 <= len(nodes) <= k:
            raise ValueError(f"node_sets[{i}] has {len(nodes)} nodes; expected 1..{k}")
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"node_sets[{i}] contains duplicates")
        cleaned.append(nodes)
    return cleaned
