"""Command-line entry point.

Subcommands: ingest (edge list -> binary cache), sample (write subgraph
pairs), train (fit a model, write checkpoint + metrics CSV), eval (score a
checkpoint), ablate (run variants 1-4 under one seed), sweep (hyperparameter
grid), and gradcheck (finite-difference verification of the gradients).

Runs are configured by a single JSON file; the --seed/--out/--threads flags
override the matching keys. Exit codes: 0 success, 1 runtime failure,
2 configuration error. All artifacts are written under the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from sgevo.datasets import make_periodic_blocks, make_triadic_closure
from sgevo.graph import (load_graph_cache, load_node_types, parse_edge_list,
                         save_graph_cache, split_snapshots)
from sgevo.model import TwinTowerModel, make_batch
from sgevo.patterns import make_pattern
from sgevo.sampling import SubgraphSampler, load_pairs, save_pairs
from sgevo.training import (TrainConfig, evaluate_pattern, evaluate_structure,
                            build_pattern_sets, finite_difference_check, randomize_parameters,
                            sweep, train_pattern_prediction,
                            train_subgraph_prediction, write_metrics_csv,
                            write_sweep_csv)


class ConfigError(Exception):
    """Configuration problem; maps to exit code 2."""


_DEFAULTS = {
    "node_types": None,
    "pattern": None,
    "snapshots": 10,
    "lr": 0.005,
    "pairs_per_snapshot": 10000,
    "batch_size": 64,
    "seed": 0,
    "variant": 4,
    "alpha": 0.01,
    "train_fraction": 0.7,
    "test_pairs": 2000,
    "threads": 1,
    "out": "out",
    "weighted": False,
    "grid": None,
    "transition": 1,
}
_REQUIRED_TRAIN = ("dataset", "task", "k", "dim", "blocks", "heads", "epochs")


def load_config(path, required, overrides=None) -> dict:
    """Read a JSON run config; unknown keys are rejected, missing required
    keys are reported by name, and flag overrides are applied last."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    known = set(_DEFAULTS) | set(_REQUIRED_TRAIN)
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
    merged = dict(_DEFAULTS)
    merged.update(cfg)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def _train_config(cfg) -> TrainConfig:
    try:
        return TrainConfig(
            task=cfg["task"], k=cfg["k"], dim=cfg["dim"], blocks=cfg["blocks"],
            heads=cfg["heads"], lr=cfg["lr"], epochs=cfg["epochs"],
            pairs_per_snapshot=cfg["pairs_per_snapshot"],
            batch_size=cfg["batch_size"], seed=cfg["seed"],
            variant=cfg["variant"], snapshots=cfg["snapshots"],
            alpha=cfg["alpha"], train_fraction=cfg["train_fraction"],
            test_pairs=cfg["test_pairs"], threads=cfg["threads"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _load_graph(cfg):
    path = cfg["dataset"]
    if str(path).endswith(".bin"):
        graph = load_graph_cache(path)
    else:
        graph = parse_edge_list(path, weighted=cfg["weighted"])
    if cfg["node_types"]:
        load_node_types(cfg["node_types"], graph)
    return graph


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pattern(cfg):
    entry = cfg["pattern"]
    if entry is None:
        raise ConfigError("task pattern-prediction needs a `pattern` config key")
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError("`pattern` must be an object with a `kind` key")
    params = {key: value for key, value in entry.items() if key != "kind"}
    try:
        return make_pattern(entry["kind"], **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_ingest(args) -> int:
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    graph = parse_edge_list(args.edgelist, weighted=args.weighted)
    if args.types:
        load_node_types(args.types, graph)
    target = out / "graph.bin"
    save_graph_cache(graph, target)
    print(f"ingested {graph.num_edges} edges, {graph.num_nodes} nodes "
          f"({graph.self_loops_dropped} self-loops dropped) -> {target}")
    return 0


def cmd_sample(args) -> int:
    cfg = load_config(args.config, required=("dataset", "k"), overrides=_overrides(args))
    graph = _load_graph(cfg)
    snaps = split_snapshots(graph, cfg["snapshots"])
    t = cfg["transition"]
    if not 1 <= t <= len(snaps) - 1:
        raise ConfigError(f"transition must be in 1..{len(snaps) - 1}, got {t}")
    sampler = SubgraphSampler(cfg["k"], cfg["alpha"], seed=cfg["seed"])
    pairs = sampler.sample_pairs(snaps[t - 1], snaps[t],
                                 cfg["pairs_per_snapshot"], threads=cfg["threads"])
    out = _out_dir(cfg)
    save_pairs(pairs, out / "pairs.txt")
    print(f"wrote {len(pairs)} pairs -> {out / 'pairs.txt'}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, required=_REQUIRED_TRAIN, overrides=_overrides(args))
    tcfg = _train_config(cfg)
    graph = _load_graph(cfg)
    out = _out_dir(cfg)
    if tcfg.task == "subgraph-prediction":
        model, records, test_pairs = train_subgraph_prediction(graph, tcfg)
        save_pairs(test_pairs, out / "test_pairs.txt")
    else:
        pattern = _pattern(cfg)
        model, records, (test_pairs, test_labels) = \
            train_pattern_prediction(graph, pattern, tcfg)
        save_pairs(test_pairs, out / "test_pairs.txt")
        np.savetxt(out / "test_labels.txt", test_labels, fmt="%d")
    model.save(out / "model.ckpt")
    write_metrics_csv(records, out / "metrics.csv")
    with open(out / "run_config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    print(f"final AUC {records[-1].auc:.4f} after {records[-1].epoch} epochs; "
          f"artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config, required=_REQUIRED_TRAIN, overrides=_overrides(args))
    tcfg = _train_config(cfg)
    graph = _load_graph(cfg)
    out = _out_dir(cfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "model.ckpt"
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    task = "structure" if tcfg.task == "subgraph-prediction" else "pattern"
    model = TwinTowerModel(graph.num_nodes, embed_dim=tcfg.dim, k=tcfg.k,
                           blocks=tcfg.blocks, heads=tcfg.heads,
                           num_types=graph.num_types, task=task,
                           variant=tcfg.variant, seed=tcfg.seed)
    model.load(ckpt)
    if task == "structure":
        snaps = split_snapshots(graph, tcfg.snapshots)
        pairs_path = out / "test_pairs.txt"
        if pairs_path.exists():
            test_pairs = load_pairs(pairs_path)
        else:
            sampler = SubgraphSampler(tcfg.k, tcfg.alpha,
                                      seed=_eval_seed(tcfg.seed))
            test_pairs = sampler.sample_pairs(snaps[-2], snaps[-1],
                                              tcfg.test_pairs, tcfg.threads)
        auc, loss, _, _ = evaluate_structure(model, test_pairs, snaps[-2])
    else:
        pattern = _pattern(cfg)
        _, _, test_pairs, test_labels, early = build_pattern_sets(graph, pattern, tcfg)
        auc, loss, _ = evaluate_pattern(model, test_pairs, test_labels, early)
    (out / "auc.txt").write_text(f"{auc:.6f}\n")
    print(f"AUC {auc:.6f} (loss {loss:.6f}) -> {out / 'auc.txt'}")
    return 0


def _eval_seed(seed):
    return int(np.random.SeedSequence(entropy=(seed, 101)).generate_state(1)[0])


def cmd_ablate(args) -> int:
    cfg = load_config(args.config, required=_REQUIRED_TRAIN, overrides=_overrides(args))
    tcfg = _train_config(cfg)
    graph = _load_graph(cfg)
    out = _out_dir(cfg)
    pattern = _pattern(cfg) if tcfg.task == "pattern-prediction" else None
    rows = []
    for variant in (1, 2, 3, 4):
        vcfg = replace(tcfg, variant=variant)
        if pattern is None:
            _, records, _ = train_subgraph_prediction(graph, vcfg)
        else:
            _, records, _ = train_pattern_prediction(graph, pattern, vcfg)
        last = records[-1]
        rows.append((variant, last))
        print(f"variant {variant}: AUC {last.auc:.4f}, loss {last.loss:.4f}")
    with open(out / "ablation.csv", "w") as fh:
        fh.write("variant,epoch,loss,auc,seconds,params\n")
        for variant, rec in rows:
            fh.write(f"{variant},{rec.epoch},{rec.loss:.6f},{rec.auc:.6f},"
                     f"{rec.seconds:.3f},{rec.params}\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, required=_REQUIRED_TRAIN + ("grid",),
                      overrides=_overrides(args))
    tcfg = _train_config(cfg)
    if not isinstance(cfg["grid"], dict):
        raise ConfigError("`grid` must be an object mapping k/dim/blocks/heads to lists")
    graph = _load_graph(cfg)
    out = _out_dir(cfg)
    try:
        rows = sweep(graph, cfg["grid"], tcfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_sweep_csv(rows, out / "sweep.csv")
    print(f"{len(rows)} sweep rows -> {out / 'sweep.csv'}")
    return 0


def cmd_gradcheck(args) -> int:
    """Finite-difference check of both heads, plain and typed graphs."""
    seed = args.seed if args.seed is not None else 0
    plain = make_triadic_closure(num_nodes=24, T=3, seed=seed)
    typed = make_periodic_blocks(blocks=4, T=3, seed=seed)
    failed = False
    for task, graph in (("structure", plain), ("pattern", typed)):
        snaps = split_snapshots(graph, 3)
        sampler = SubgraphSampler(k=4, alpha=0.05, seed=seed)
        pairs = sampler.sample_pairs(snaps[0], snaps[1], 4)
        model = TwinTowerModel(graph.num_nodes, embed_dim=8, k=4, blocks=2,
                               heads=2, num_types=graph.num_types, task=task,
                               variant=4, seed=seed, dtype=np.float64)
        randomize_parameters(model, seed=seed + 1)
        labels = [1.0, 0.0, 1.0, 0.0] if task == "pattern" else None
        batch = make_batch(pairs, snaps[0], model.k, pattern_labels=labels)
        worst, _ = finite_difference_check(model, batch, seed=seed)
        ok = worst < 1e-4
        failed = failed or not ok
        print(f"gradcheck {task}: max relative error {worst:.3e} "
              f"{'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def _overrides(args):
    return {"seed": args.seed, "out": args.out, "threads": args.threads}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgevo",
        description="Subgraph evolution prediction on temporal graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--threads", type=int, default=None, help="override threads")

    p = sub.add_parser("ingest", help="parse an edge list into a binary cache")
    p.add_argument("edgelist", help="whitespace-separated temporal edge list")
    p.add_argument("--weighted", action="store_true",
                   help="edge lines carry a weight column")
    p.add_argument("--types", default=None, help="node-type sidecar file")
    common(p, config=False)
    p.set_defaults(fn=cmd_ingest)

    for name, fn, help_text in (
            ("sample", cmd_sample, "sample subgraph pairs to a text file"),
            ("train", cmd_train, "train a model and write artifacts"),
            ("eval", cmd_eval, "evaluate a checkpoint and write its AUC"),
            ("ablate", cmd_ablate, "train ablation variants 1-4 under one seed"),
            ("sweep", cmd_sweep, "train across a hyperparameter grid")):
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name == "eval":
            p.add_argument("--checkpoint", default=None,
                           help="checkpoint path (default: <out>/model.ckpt)")
        p.set_defaults(fn=fn)

    p = sub.add_parser("gradcheck",
                       help="verify gradients against finite differences")
    common(p, config=False)
    p.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
