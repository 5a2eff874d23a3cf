"""Anchor-guided representation-space separation for graph-level anomaly
detection: a trainable graph encoder, anchor-based channel weighting,
separation training, and a cross-validated AUC evaluation harness."""

__version__ = "0.1.0"

from .anchors import (
    AnchorSets,
    DistanceProfile,
    WeightFactors,
    anchor_count,
    decide_weights,
    representation_distances,
    sample_anchors,
)
from .encoder import Encoding, ModelParams, encode, init_params, pool_nodes_fe
from .evaluation import (
    EvalReport,
    ScoreResult,
    auc,
    classify,
    cross_validate,
    run_both_orientations,
    score_graph,
    score_graphs,
)
from .graphs import (
    FoldPlan,
    Graph,
    GraphSet,
    degree_features,
    load_tudataset,
    make_folds,
    save_tudataset,
    split_by_label,
)
from .synth import synth_connectivity_corpus, synth_hexagon_corpus
from .training import (
    BatchDistances,
    EpochRecord,
    TrainConfig,
    TrainedModel,
    loss_n,
    loss_p,
    space_distance,
    train,
)

__all__ = [
    "AnchorSets", "DistanceProfile", "WeightFactors", "anchor_count",
    "decide_weights", "representation_distances", "sample_anchors",
    "Encoding", "ModelParams", "encode", "init_params", "pool_nodes_fe",
    "EvalReport", "ScoreResult", "auc", "classify", "cross_validate",
    "run_both_orientations", "score_graph", "score_graphs",
    "FoldPlan", "Graph", "GraphSet", "degree_features", "load_tudataset",
    "make_folds", "save_tudataset", "split_by_label",
    "synth_connectivity_corpus", "synth_hexagon_corpus",
    "BatchDistances", "EpochRecord", "TrainConfig", "TrainedModel",
    "loss_n", "loss_p", "space_distance", "train",
    "__version__",
]
