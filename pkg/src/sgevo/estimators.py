"""Estimator-style wrappers around the training pipelines.

``SubgraphPredictor`` fits the structure task on a temporal graph and scores
edge probabilities for arbitrary node sets; ``PatternPredictor`` does the
same for pattern emergence. Both follow the scikit-learn convention:
constructor stores hyperparameters untouched, ``fit`` validates and learns,
fitted state lives in trailing-underscore attributes, and ``get_params`` /
``set_params`` come from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from sgevo.graph import (InducedSubgraph, induced_subgraph, split_continuous,
                         split_snapshots)
from sgevo.model import make_batch
from sgevo.patterns import make_pattern
from sgevo.sampling import SubgraphPair, attention_matrix
from sgevo.training import (TrainConfig, train_pattern_prediction,
                            train_subgraph_prediction)
from sgevo.validation import check_node_sets


def _pairs_from_node_sets(node_sets, snapshot, k):
    """Wrap raw node sets as prediction-time pairs (labels unused)."""
    pairs = []
    for nodes in check_node_sets(node_sets, snapshot.num_nodes, k):
        before = induced_subgraph(snapshot, nodes)
        dummy = InducedSubgraph(nodes=before.nodes,
                                adjacency=np.zeros_like(before.adjacency))
        pairs.append(SubgraphPair(t=snapshot.index, nodes=before.nodes,
                                  before=before, after=dummy,
                                  attention=attention_matrix(before, snapshot)))
    return pairs


class SubgraphPredictor(BaseEstimator):
    """Predict the next-snapshot adjacency of sampled subgraphs.

    ``fit`` takes a TemporalGraph, trains over its snapshot transitions, and
    keeps the held-out AUC of the final transition in ``test_auc_``.
    """

    def __init__(self, snapshots=10, k=10, dim=128, blocks=6, heads=4,
                 lr=0.005, epochs=5, pairs_per_snapshot=10000, batch_size=64,
                 alpha=0.01, variant=4, seed=0, test_pairs=2000, threads=1):
        self.snapshots = snapshots
        self.k = k
        self.dim = dim
        self.blocks = blocks
        self.heads = heads
        self.lr = lr
        self.epochs = epochs
        self.pairs_per_snapshot = pairs_per_snapshot
        self.batch_size = batch_size
        self.alpha = alpha
        self.variant = variant
        self.seed = seed
        self.test_pairs = test_pairs
        self.threads = threads

    def _config(self) -> TrainConfig:
        return TrainConfig(task="subgraph-prediction", k=self.k, dim=self.dim,
                           blocks=self.blocks, heads=self.heads, lr=self.lr,
                           epochs=self.epochs,
                           pairs_per_snapshot=self.pairs_per_snapshot,
                           batch_size=self.batch_size, seed=self.seed,
                           variant=self.variant, snapshots=self.snapshots,
                           alpha=self.alpha, test_pairs=self.test_pairs,
                           threads=self.threads)

    def fit(self, graph, y=None):
        cfg = self._config()
        self.model_, self.history_, self.test_pairs_ = \
            train_subgraph_prediction(graph, cfg)
        self.snapshots_ = split_snapshots(graph, cfg.snapshots)
        self.test_auc_ = self.history_[-1].auc
        return self

    def predict_proba(self, node_sets, snapshot=None):
        """Symmetric edge-probability matrix per node set.

        ``snapshot`` defaults to the last training snapshot (predicting one
        step past the data). The diagonal is not a modeled quantity.
        """
        if snapshot is None:
            snapshot = self.snapshots_[-1]
        out = []
        for pair in _pairs_from_node_sets(node_sets, snapshot, self.model_.k):
            batch = make_batch([pair], snapshot, self.model_.k)
            probs = np.asarray(self.model_.predict_structure(batch).data)[0]
            out.append(probs[:pair.n, :pair.n])
        return out

    def predict(self, node_sets, snapshot=None, threshold=0.5):
        return [(p > threshold).astype(np.int64)
                for p in self.predict_proba(node_sets, snapshot)]

    def score(self, X=None, y=None) -> float:
        """Held-out AUC from fitting (arguments accepted for API parity)."""
        return self.test_auc_


class PatternPredictor(BaseEstimator):
    """Predict whether a pattern emerges for a node set in the future graph."""

    def __init__(self, pattern="densify", pattern_params=None,
                 train_fraction=0.7, k=10, dim=128, blocks=6, heads=4,
                 lr=0.005, epochs=5, pairs_per_snapshot=10000, batch_size=64,
                 alpha=0.01, variant=4, seed=0, test_pairs=2000, threads=1):
        self.pattern = pattern
        self.pattern_params = pattern_params
        self.train_fraction = train_fraction
        self.k = k
        self.dim = dim
        self.blocks = blocks
        self.heads = heads
        self.lr = lr
        self.epochs = epochs
        self.pairs_per_snapshot = pairs_per_snapshot
        self.batch_size = batch_size
        self.alpha = alpha
        self.variant = variant
        self.seed = seed
        self.test_pairs = test_pairs
        self.threads = threads

    def _config(self) -> TrainConfig:
        return TrainConfig(task="pattern-prediction", k=self.k, dim=self.dim,
                           blocks=self.blocks, heads=self.heads, lr=self.lr,
                           epochs=self.epochs,
                           pairs_per_snapshot=self.pairs_per_snapshot,
                           batch_size=self.batch_size, seed=self.seed,
                           variant=self.variant, alpha=self.alpha,
                           train_fraction=self.train_fraction,
                           test_pairs=self.test_pairs, threads=self.threads)

    def fit(self, graph, y=None):
        pattern = make_pattern(self.pattern, **(self.pattern_params or {}))
        self.model_, self.history_, (self.test_pairs_, self.test_labels_) = \
            train_pattern_prediction(graph, pattern, self._config())
        self.view_, _ = split_continuous(graph, self.train_fraction)
        self.test_auc_ = self.history_[-1].auc
        return self

    def predict_proba(self, node_sets) -> np.ndarray:
        pairs = _pairs_from_node_sets(node_sets, self.view_, self.model_.k)
        batch = make_batch(pairs, self.view_, self.model_.k)
        return np.asarray(self.model_.predict_pattern(batch).data)

    def predict(self, node_sets, threshold=0.5) -> np.ndarray:
        return (self.predict_proba(node_sets) > threshold).astype(np.int64)

    def score(self, X=None, y=None) -> float:
        return self.test_auc_
