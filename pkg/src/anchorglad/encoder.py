"""Graph convolutional encoder producing the two anomaly channels.

A stack of L >= 2 layers propagates features through the normalized
adjacency: H^l = ReLU(A_hat . H^(l-1) . W^l), with no nonlinearity after
the final layer. The node-level channel reads the penultimate layer (its
max/mean pool), the graph-level channel max-pools the final layer; both
are L2-normalized so every pairwise distance downstream is bounded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DimensionError
from .graphs import Graph

FE_KINDS = ("max", "mean")


@dataclass
class ModelParams:
    """The trainable state: a weight matrix and a bias row per layer."""

    layer_weights: list[ad.Tensor]
    layer_biases: list[ad.Tensor]
    dims: tuple[int, ...]

    def parameters(self) -> list[ad.Tensor]:
        return [*self.layer_weights, *self.layer_biases]

    def copy(self) -> "ModelParams":
        return ModelParams(
            layer_weights=[ad.parameter(w.data.copy()) for w in self.layer_weights],
            layer_biases=[ad.parameter(b.data.copy()) for b in self.layer_biases],
            dims=self.dims)


@dataclass
class Encoding:
    """Per-graph outputs: raw penultimate node reps plus the two pooled,
    normalized channel vectors."""

    node_reps: ad.Tensor
    graph_rep: ad.Tensor
    pooled_node_rep: ad.Tensor


def init_params(dims, seed: int) -> ModelParams:
    """Glorot-uniform weights and 1/sqrt(fan_in)-uniform biases.

    A nonzero bias matters with one-column degree features: without it,
    ReLU of (nonnegative scalar x fixed vector) keeps one direction per
    layer and both pooled channels collapse to a single point after
    normalization. Deterministic in the seed.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 3:
        raise ValueError("need at least two layers (dims length >= 3)")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(ad.parameter(rng.uniform(-limit, limit, size=(fan_in, fan_out))))
        b_limit = 1.0 / np.sqrt(fan_in)
        biases.append(ad.parameter(rng.uniform(-b_limit, b_limit, size=(1, fan_out))))
    return ModelParams(layer_weights=weights, layer_biases=biases, dims=dims)


def pool_nodes_fe(tape, node_reps: ad.Tensor, kind: str = "max") -> ad.Tensor:
    """The node-channel readout f_e; max by default, mean as an alternative."""
    if kind == "max":
        return ad.row_max_pool(tape, node_reps)
    if kind == "mean":
        return ad.row_mean_pool(tape, node_reps)
    raise ValueError(f"fe kind must be one of {FE_KINDS}, got {kind!r}")


def encode(graph: Graph, params: ModelParams, tape=None, *,
           fe_kind: str = "max", normalize: bool = True,
           adjacency: ad.Tensor | None = None) -> Encoding:
    """Run the graph through the encoder.

    ``adjacency`` lets callers reuse a precomputed normalized adjacency
    (it is constant per graph); otherwise it is built here. Differentiable
    w.r.t. the layer weights when a tape is supplied.
    """
    d_in = graph.features.shape[1]
    if d_in != params.dims[0]:
        raise DimensionError(
            f"graph features have {d_in} columns, encoder expects {params.dims[0]}")
    a_hat = adjacency if adjacency is not None else ad.normalize_adjacency(graph)
    h = ad.constant(graph.features)
    last = len(params.layer_weights) - 1
    node_reps = None
    for l, (w, b) in enumerate(zip(params.layer_weights, params.layer_biases)):
        h = ad.matmul(tape, a_hat, h)
        h = ad.matmul(tape, h, w)
        h = ad.add_row_bias(tape, h, b)
        if l < last:
            h = ad.relu(tape, h)
        if l == last - 1:
            node_reps = h
    graph_rep = ad.row_max_pool(tape, h)
    pooled = pool_nodes_fe(tape, node_reps, fe_kind)
    if normalize:
        graph_rep = ad.l2_normalize_rows(tape, graph_rep)
        pooled = ad.l2_normalize_rows(tape, pooled)
    return Encoding(node_reps=node_reps, graph_rep=graph_rep, pooled_node_rep=pooled)
