"""Training loops, evaluation, baselines, and hyperparameter sweeps.

The structure task trains on pairs sampled from each adjacent snapshot
transition in chronological order and is scored on held-out pairs from the
final transition. The pattern task splits the edge stream 70/30 into two
continuous views, samples node sets from the earlier view, labels them with
a pattern predicate evaluated on the later view, and balances the classes by
down-sampling. Both report per-epoch loss, AUC, wall time, and model size.
"""

from __future__ import annotations

import csv
import sys
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from sklearn.model_selection import ParameterGrid

from sgevo import tensor as tc
from sgevo.graph import TemporalGraph, split_continuous, split_snapshots
from sgevo.metrics import auc_score
from sgevo.model import TwinTowerModel, make_batch, pair_mask
from sgevo.sampling import SubgraphSampler
from sgevo.validation import check_in, check_int, check_positive

TASKS = ("subgraph-prediction", "pattern-prediction")


@dataclass
class TrainConfig:
    """Run hyperparameters shared by both tasks."""

    task: str = "subgraph-prediction"
    k: int = 10
    dim: int = 128
    blocks: int = 6
    heads: int = 4
    lr: float = 0.005
    epochs: int = 5
    pairs_per_snapshot: int = 10000
    batch_size: int = 64
    seed: int = 0
    variant: int = 4
    snapshots: int = 10
    alpha: float = 0.01
    train_fraction: float = 0.7
    test_pairs: int = 2000
    threads: int = 1

    def __post_init__(self):
        check_in("task", self.task, TASKS)
        check_int("k", self.k, lo=3)
        check_int("dim", self.dim, lo=1)
        check_int("blocks", self.blocks, lo=1)
        check_int("heads", self.heads, lo=1)
        check_positive("lr", self.lr)
        check_int("epochs", self.epochs, lo=1)
        check_int("pairs_per_snapshot", self.pairs_per_snapshot, lo=1)
        check_int("batch_size", self.batch_size, lo=1)
        check_int("variant", self.variant, lo=1, hi=4)
        check_int("snapshots", self.snapshots, lo=3)
        check_int("test_pairs", self.test_pairs, lo=2)
        check_int("threads", self.threads, lo=1)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass
class MetricsRecord:
    epoch: int
    loss: float
    auc: float
    seconds: float
    params: int


def _derived_seed(seed: int, salt: int) -> int:
    return int(np.random.SeedSequence(entropy=(seed, salt)).generate_state(1)[0])


def _real_pair_entries(matrix_batch, batch):
    """Flatten the real i<j entries of per-sample k-by-k matrices."""
    sel = pair_mask(batch["mask"]) > 0
    return np.asarray(matrix_batch)[sel]


def evaluate_structure(model: TwinTowerModel, pairs, snapshot, batch_size: int = 256):
    """Score held-out pairs; returns (auc, mean per-pair loss, scores, labels)."""
    scores, labels = [], []
    for i in range(0, len(pairs), batch_size):
        batch = make_batch(pairs[i:i + batch_size], snapshot, model.k)
        probs = model.predict_structure(batch)
        scores.append(_real_pair_entries(probs.data, batch))
        labels.append(_real_pair_entries(batch["labels_matrix"], batch))
    scores = np.concatenate(scores)
    labels = np.concatenate(labels)
    p = np.clip(scores, 1e-7, 1 - 1e-7)
    loss = float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))
    return auc_score(labels.astype(np.int64), scores), loss, scores, labels


def train_subgraph_prediction(graph: TemporalGraph, cfg: TrainConfig):
    """Train on transitions 1..T-2, test on the last transition.

    Returns (model, per-epoch MetricsRecord list, test pairs). Fresh training
    pairs are drawn every epoch; the test set is sampled once with its own
    seed so it never depends on training randomness.
    """
    snaps = split_snapshots(graph, cfg.snapshots)
    usable = []
    for t in range(len(snaps) - 2):
        if snaps[t].edge_count == 0:
            warnings.warn(f"snapshot {t + 1} has no edges; transition skipped")
            continue
        usable.append((snaps[t], snaps[t + 1]))
    if not usable:
        raise ValueError("no usable training transitions (all snapshots empty)")

    test_sampler = SubgraphSampler(cfg.k, cfg.alpha, seed=_derived_seed(cfg.seed, 101))
    test_pairs = test_sampler.sample_pairs(snaps[-2], snaps[-1], cfg.test_pairs,
                                           threads=cfg.threads)
    model = TwinTowerModel(graph.num_nodes, embed_dim=cfg.dim, k=cfg.k,
                           blocks=cfg.blocks, heads=cfg.heads,
                           num_types=graph.num_types, task="structure",
                           variant=cfg.variant, seed=cfg.seed)
    opt = tc.Adam(model.parameters(), lr=cfg.lr)
    sampler = SubgraphSampler(cfg.k, cfg.alpha, seed=cfg.seed)
    records = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        loss_sum, n_seen = 0.0, 0
        for snap_t, snap_t1 in usable:
            pairs = sampler.sample_pairs(snap_t, snap_t1, cfg.pairs_per_snapshot,
                                         threads=cfg.threads)
            for i in range(0, len(pairs), cfg.batch_size):
                chunk = pairs[i:i + cfg.batch_size]
                batch = make_batch(chunk, snap_t, cfg.k)
                with tc.Tape() as tape:
                    probs = model.predict_structure(batch)
                    loss = model.structure_loss(probs, batch)
                    tape.backward(loss)
                opt.step()
                opt.zero_grad()
                loss_sum += loss.item() * len(chunk)
                n_seen += len(chunk)
        auc, _, _, _ = evaluate_structure(model, test_pairs, snaps[-2])
        records.append(MetricsRecord(epoch=epoch + 1, loss=loss_sum / n_seen,
                                     auc=auc, seconds=time.perf_counter() - t0,
                                     params=model.param_count()))
    return model, records, test_pairs


def degree_product_baseline(pairs, snapshot):
    """Score each real node pair by the product of its snapshot degrees."""
    scores, labels = [], []
    for pair in pairs:
        degs = snapshot.degrees[pair.nodes].astype(np.float64)
        lab = pair.after.binary()
        for i in range(pair.n):
            for j in range(i + 1, pair.n):
                scores.append(degs[i] * degs[j])
                labels.append(lab[i, j])
    return np.array(labels, dtype=np.int64), np.array(scores)


def build_pattern_sets(graph: TemporalGraph, pattern, cfg: TrainConfig):
    """Sample and label balanced train plus held-out test sets.

    Returns (train_pairs, train_labels, test_pairs, test_labels, early_view).
    The majority class is down-sampled to exactly the minority count.
    """
    early, later = split_continuous(graph, cfg.train_fraction)
    types = graph.node_types

    def label(pair):
        node_types = None if types is None else types[pair.nodes]
        return pattern.evaluate(pair.before, pair.after, node_types)

    sampler = SubgraphSampler(cfg.k, cfg.alpha, seed=cfg.seed)
    raw = sampler.sample_pairs(early, later, cfg.pairs_per_snapshot, cfg.threads)
    labels = np.array([label(p) for p in raw], dtype=np.int64)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) < 50:
        raise ValueError(f"only {len(pos)} positive pattern examples; need >= 50")
    if len(neg) < 50:
        raise ValueError(f"only {len(neg)} negative pattern examples; need >= 50")
    m = min(len(pos), len(neg))
    rng = np.random.default_rng(_derived_seed(cfg.seed, 7))
    keep = np.concatenate([rng.permutation(pos)[:m], rng.permutation(neg)[:m]])
    keep.sort()
    train_pairs = [raw[i] for i in keep]
    train_labels = labels[keep]

    test_sampler = SubgraphSampler(cfg.k, cfg.alpha, seed=_derived_seed(cfg.seed, 101))
    test_pairs = test_sampler.sample_pairs(early, later, cfg.test_pairs, cfg.threads)
    test_labels = np.array([label(p) for p in test_pairs], dtype=np.int64)
    return train_pairs, train_labels, test_pairs, test_labels, early


def evaluate_pattern(model: TwinTowerModel, pairs, labels, snapshot,
                     batch_size: int = 256):
    scores = []
    for i in range(0, len(pairs), batch_size):
        batch = make_batch(pairs[i:i + batch_size], snapshot, model.k)
        scores.append(np.asarray(model.predict_pattern(batch).data))
    scores = np.concatenate(scores)
    p = np.clip(scores, 1e-7, 1 - 1e-7)
    labels = np.asarray(labels)
    loss = float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))
    return auc_score(labels, scores), loss, scores


def train_pattern_prediction(graph: TemporalGraph, pattern, cfg: TrainConfig,
                             shuffle_labels: bool = False):
    """Train the pattern classifier on a balanced sample set.

    ``shuffle_labels`` runs the permutation (no-signal) control: train and
    test labels are independently permuted, so any reported AUC above chance
    would indicate leakage in the pipeline rather than real signal. Returns
    (model, records, test set).
    """
    train_pairs, train_labels, test_pairs, test_labels, early = \
        build_pattern_sets(graph, pattern, cfg)
    if shuffle_labels:
        rng = np.random.default_rng(_derived_seed(cfg.seed, 13))
        train_labels = rng.permutation(train_labels)
        test_labels = rng.permutation(test_labels)
    model = TwinTowerModel(graph.num_nodes, embed_dim=cfg.dim, k=cfg.k,
                           blocks=cfg.blocks, heads=cfg.heads,
                           num_types=graph.num_types, task="pattern",
                           variant=cfg.variant, seed=cfg.seed)
    opt = tc.Adam(model.parameters(), lr=cfg.lr)
    order_rng = np.random.default_rng(_derived_seed(cfg.seed, 29))
    records = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = order_rng.permutation(len(train_pairs))
        loss_sum, n_seen = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            chunk = [train_pairs[j] for j in idx]
            batch = make_batch(chunk, early, cfg.k, pattern_labels=train_labels[idx])
            with tc.Tape() as tape:
                probs = model.predict_pattern(batch)
                loss = model.pattern_loss(probs, batch["labels"])
                tape.backward(loss)
            opt.step()
            opt.zero_grad()
            loss_sum += loss.item() * len(idx)
            n_seen += len(idx)
        auc, _, _ = evaluate_pattern(model, test_pairs, test_labels, early)
        records.append(MetricsRecord(epoch=epoch + 1, loss=loss_sum / n_seen,
                                     auc=auc, seconds=time.perf_counter() - t0,
                                     params=model.param_count()))
    return model, records, (test_pairs, test_labels)


def randomize_parameters(model: TwinTowerModel, scale: float = 0.25,
                         seed: int = 0) -> None:
    """Redraw every parameter from N(0, scale^2), in place.

    The standard initialization is nearly degenerate for gradient checking:
    tower outputs start almost identical across rows, so many true
    directional derivatives sit near 1e-6 and a central difference is
    dominated by roundoff. Checking at a generic random point instead gives
    O(1e-2) gradients and a meaningful comparison.
    """
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        p.data = rng.normal(scale=scale, size=p.data.shape).astype(p.data.dtype)


def finite_difference_check(model: TwinTowerModel, batch, h: float = 1e-5,
                            coords_per_param: int = 2, seed: int = 0):
    """Compare analytic gradients to central finite differences.

    Checks ``coords_per_param`` random coordinates of every parameter and
    returns (max relative error, per-parameter dict). Relative error uses an
    absolute floor of 1e-5 so exact-zero gradients compare cleanly. Run on a
    model built with dtype=np.float64 for meaningful tolerances, and see
    randomize_parameters for why checking at the default initialization is
    not informative.
    """

    def loss_fn():
        if model.task == "structure":
            return model.structure_loss(model.predict_structure(batch), batch)
        return model.pattern_loss(model.predict_pattern(batch), batch["labels"])

    for p in model.parameters():
        p.grad = None
    with tc.Tape() as tape:
        tape.backward(loss_fn())
    grads = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
             for name, p in model.params.items()}
    rng = np.random.default_rng(seed)
    worst, by_param = 0.0, {}
    for name, p in model.params.items():
        flat = p.data.reshape(-1)
        count = min(coords_per_param, flat.size)
        coords = rng.choice(flat.size, size=count, replace=False)
        err = 0.0
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            up = loss_fn().item()
            flat[c] = orig - h
            down = loss_fn().item()
            flat[c] = orig
            numeric = (up - down) / (2.0 * h)
            analytic = grads[name].reshape(-1)[c]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-5)
            err = max(err, rel)
        by_param[name] = err
        worst = max(worst, err)
    return worst, by_param


def sweep(graph: TemporalGraph, grid: dict, base_cfg: TrainConfig):
    """Train once per grid point; failures are reported and skipped.

    ``grid`` maps a subset of {k, dim, blocks, heads} to value lists. Each
    row carries the final epoch's metrics plus the grid coordinates.
    """
    allowed = {"k", "dim", "blocks", "heads"}
    bad = set(grid) - allowed
    if bad:
        raise ValueError(f"sweep grid keys {sorted(bad)} not in {sorted(allowed)}")
    if not grid or not all(len(v) for v in grid.values()):
        raise ValueError("sweep grid is empty")
    rows = []
    for point in ParameterGrid(grid):
        cfg = replace(base_cfg, **point)
        try:
            _, records, _ = train_subgraph_prediction(graph, cfg)
        except Exception as exc:
            print(f"sweep point {point} failed: {exc}", file=sys.stderr)
            continue
        last = records[-1]
        rows.append({"epoch": last.epoch, "loss": last.loss, "auc": last.auc,
                     "seconds": last.seconds, "params": last.params,
                     "k": cfg.k, "D": cfg.dim, "b": cfg.blocks, "h": cfg.heads})
    return rows


def write_metrics_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "auc", "seconds", "params"])
        for r in records:
            writer.writerow([r.epoch, f"{r.loss:.6f}", f"{r.auc:.6f}",
                             f"{r.seconds:.3f}", r.params])


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "auc", "seconds", "params",
                         "k", "D", "b", "h"])
        for r in rows:
            writer.writerow([r["epoch"], f"{r['loss']:.6f}", f"{r['auc']:.6f}",
                             f"{r['seconds']:.3f}", r["params"],
                             r["k"], r["D"], r["b"], r["h"]])
