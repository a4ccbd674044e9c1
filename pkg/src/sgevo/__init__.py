"""sgevo: subgraph evolution prediction on temporal graphs.

Pipeline: ingest timestamped edge lists into snapshot or continuous views,
sample subgraph evolution pairs with a weighted-walk sampler, and train a
twin-tower cross-attention model to predict either future subgraph structure
or the emergence of heterogeneous patterns.
"""

from sgevo.graph import (
    TemporalGraph,
    Snapshot,
    InducedSubgraph,
    parse_edge_list,
    load_node_types,
    split_snapshots,
    split_continuous,
    induced_subgraph,
    save_graph_cache,
    load_graph_cache,
)
from sgevo.sampling import (
    SubgraphSampler,
    SubgraphPair,
    transfer_probability,
    draw_neighbor,
    attention_matrix,
    save_pairs,
    load_pairs,
)
from sgevo.model import (
    TwinTowerModel,
    make_batch,
    build_inputs,
    self_attention,
    multi_head_attention,
)
from sgevo.metrics import auc_score
from sgevo.patterns import Pattern, make_pattern, register_pattern
from sgevo.datasets import (
    make_triadic_closure,
    make_periodic_blocks,
    generate_synthetic,
)
from sgevo.training import (
    TrainConfig,
    MetricsRecord,
    train_subgraph_prediction,
    train_pattern_prediction,
    evaluate_structure,
    evaluate_pattern,
    degree_product_baseline,
    finite_difference_check,
    randomize_parameters,
    sweep,
)
from sgevo.estimators import SubgraphPredictor, PatternPredictor

__version__ = "0.1.0"

__all__ = [
    "TemporalGraph",
    "Snapshot",
    "InducedSubgraph",
    "parse_edge_list",
    "load_node_types",
    "split_snapshots",
    "split_continuous",
    "induced_subgraph",
    "save_graph_cache",
    "load_graph_cache",
    "SubgraphSampler",
    "SubgraphPair",
    "transfer_probability",
    "draw_neighbor",
    "attention_matrix",
    "save_pairs",
    "load_pairs",
    "TwinTowerModel",
    "make_batch",
    "build_inputs",
    "self_attention",
    "multi_head_attention",
    "auc_score",
    "Pattern",
    "make_pattern",
    "register_pattern",
    "make_triadic_closure",
    "make_periodic_blocks",
    "generate_synthetic",
    "TrainConfig",
    "MetricsRecord",
    "train_subgraph_prediction",
    "train_pattern_prediction",
    "evaluate_structure",
    "evaluate_pattern",
    "degree_product_baseline",
    "finite_difference_check",
    "randomize_parameters",
    "sweep",
    "SubgraphPredictor",
    "PatternPredictor",
    "__version__",
]
