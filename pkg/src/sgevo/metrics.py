"""Ranking metrics for link and pattern prediction."""

from __future__ import annotations

import numpy as np


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks; tied scores share the mean of their positions."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    n = len(s)
    starts = np.r_[0, np.flatnonzero(s[1:] != s[:-1]) + 1]
    stops = np.r_[starts[1:], n]
    group_rank = (starts + stops + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, stops - starts)
    return ranks


def auc_score(labels, scores) -> float:
    """Area under the ROC curve via the rank-sum statistic.

    Equivalent to the probability that a random positive outranks a random
    negative, with ties counting one half. Requires both classes.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError("labels and scores must be 1-D and the same length")
    if len(labels) == 0:
        raise ValueError("empty input")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = _average_ranks(scores)
    r_pos = ranks[labels == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
