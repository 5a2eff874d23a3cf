"""Anchor selection and the anomaly-aware channel weighting.

Anchors are reference graphs drawn uniformly without replacement from each
partition; their count follows k^round(log10(partition size)), rounded
half-up and clamped into [1, partition size]. Four diagnostic distances
between the normal partition and the two anchor sets decide which channel
(graph-level vs node-level) the training distances should weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import pairwise_mean_value
from .encoder import ModelParams, encode
from .graphs import GraphSet, split_by_label


@dataclass(frozen=True)
class AnchorSets:
    """Indices (into the source GraphSet) of the two anchor subsets."""

    normal_indices: tuple[int, ...]
    abnormal_indices: tuple[int, ...]
    seed: int
    ratio_factor_k: int


@dataclass(frozen=True)
class DistanceProfile:
    """The four diagnostic distances: normal partition vs normal anchors
    (node/graph channel) and vs abnormal anchors (node/graph channel)."""

    d_pnode: float
    d_pgraph: float
    d_nnode: float
    d_ngraph: float


@dataclass(frozen=True)
class WeightFactors:
    """Channel weights: alpha scales graph-level terms, beta node-level."""

    alpha: float
    beta: float


def anchor_count(set_size: int, k: int) -> int:
    """k raised to round(log10(set_size)), half-up, clamped to [1, set_size]."""
    if set_size < 1 or k < 1:
        raise ValueError("set_size and k must be positive")
    exponent = math.floor(math.log10(set_size) + 0.5)
    return max(1, min(k ** exponent, set_size))


def sample_anchors(graph_set: GraphSet, k: int, seed: int) -> AnchorSets:
    """Draw anchor subsets from each partition, deterministically in seed."""
    normal, abnormal = split_by_label(graph_set)
    rng = np.random.default_rng(seed)
    n_norm = anchor_count(len(normal), k)
    n_abn = anchor_count(len(abnormal), k)
    pick_norm = rng.choice(len(normal), size=n_norm, replace=False)
    pick_abn = rng.choice(len(abnormal), size=n_abn, replace=False)
    return AnchorSets(
        normal_indices=tuple(sorted(normal[i] for i in pick_norm)),
        abnormal_indices=tuple(sorted(abnormal[i] for i in pick_abn)),
        seed=seed,
        ratio_factor_k=k)


def representation_distances(graph_set: GraphSet, anchor_sets: AnchorSets,
                             params: ModelParams, *, fe_kind: str = "max",
                             normalize: bool = True) -> DistanceProfile:
    """The four diagnostic distances under the current (often untrained)
    encoder weights.

    All four are measured from the full normal partition: to the normal
    anchors on each channel, and to the abnormal anchors on each channel.
    Self-pairs (anchors are themselves normal graphs) contribute zero and
    stay in the mean.
    """
    normal, _ = split_by_label(graph_set)
    enc = {}
    for i in set(normal) | set(anchor_sets.abnormal_indices):
        e = encode(graph_set.graphs[i], params, None,
                   fe_kind=fe_kind, normalize=normalize)
        enc[i] = (e.pooled_node_rep.data[0], e.graph_rep.data[0])
    p_node = np.array([enc[i][0] for i in normal])
    p_graph = np.array([enc[i][1] for i in normal])
    ps_node = np.array([enc[i][0] for i in anchor_sets.normal_indices])
    ps_graph = np.array([enc[i][1] for i in anchor_sets.normal_indices])
    ns_node = np.array([enc[i][0] for i in anchor_sets.abnormal_indices])
    ns_graph = np.array([enc[i][1] for i in anchor_sets.abnormal_indices])
    return DistanceProfile(
        d_pnode=pairwise_mean_value(p_node, ps_node),
        d_pgraph=pairwise_mean_value(p_graph, ps_graph),
        d_nnode=pairwise_mean_value(p_node, ns_node),
        d_ngraph=pairwise_mean_value(p_graph, ns_graph))


def decide_weights(profile: DistanceProfile) -> WeightFactors:
    """The x2 dominance rule.

    The channel whose anchor-contrast differs more than twice as much as
    the other's gets all the weight; otherwise both channels share it.
    Equality at exactly twice is not dominance.
    """
    node_diff = abs(profile.d_pnode - profile.d_nnode)
    graph_diff = abs(profile.d_pgraph - profile.d_ngraph)
    if node_diff > 2.0 * graph_diff:
        return WeightFactors(alpha=0.0, beta=1.0)
    if graph_diff > 2.0 * node_diff:
        return WeightFactors(alpha=1.0, beta=0.0)
    return WeightFactors(alpha=0.5, beta=0.5)
