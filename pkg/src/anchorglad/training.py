"""Weighted representation-space distances, the two alternating losses,
and the full training loop.

Each epoch first walks the normal partition in mini-batches minimizing
loss_p = d1 - d2 - d3 (pull normals toward normal anchors, push them from
abnormal anchors, push the two anchor sets apart), then walks the abnormal
partition minimizing the mirror-image loss_n = d5 - d4 - d3. Anchor
encodings are recomputed every batch with the current weights, so anchors
receive gradients like any other training graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import autodiff as ad
from .anchors import (
    AnchorSets,
    DistanceProfile,
    WeightFactors,
    decide_weights,
    representation_distances,
    sample_anchors,
)
from .encoder import FE_KINDS, Encoding, ModelParams, encode, init_params
from .errors import DimensionError, NonFiniteError, TrainingDivergedError
from .graphs import GraphSet, content_fingerprint, split_by_label
from .seeding import derive_seed

import numpy as np

OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    ablate_constant_weights: bool = False  # force alpha = beta = 1
    ablate_drop_dist3: bool = False        # drop the anchor-separation term
    refresh_anchors_per_epoch: bool = False
    fe_kind: str = "max"
    hidden_dims: tuple[int, ...] = (128, 64, 32)
    anchor_k: int = 4
    normalize_reps: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.fe_kind not in FE_KINDS:
            raise ValueError(f"fe_kind must be one of {FE_KINDS}")
        if len(self.hidden_dims) < 2:
            raise ValueError("need at least two layers of hidden dims")
        if self.anchor_k < 1:
            raise ValueError("anchor_k must be >= 1")


@dataclass
class BatchDistances:
    """Per-epoch means of the five space distances (batch-averaged)."""

    dist1: float
    dist2: float
    dist3: float
    dist4: float
    dist5: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    dist1: float
    dist2: float
    dist3: float
    dist4: float
    dist5: float
    loss_p: float
    loss_n: float

    CSV_HEADER = "epoch,dist1,dist2,dist3,dist4,dist5,loss_p,loss_n"

    def csv_row(self) -> str:
        return (f"{self.epoch},{self.dist1!r},{self.dist2!r},{self.dist3!r},"
                f"{self.dist4!r},{self.dist5!r},{self.loss_p!r},{self.loss_n!r}")

    @property
    def distances(self) -> BatchDistances:
        return BatchDistances(self.dist1, self.dist2, self.dist3,
                              self.dist4, self.dist5)


@dataclass
class TrainedModel:
    """Everything scoring needs: weights, frozen anchors, channel weights."""

    params: ModelParams
    anchors: AnchorSets
    weights: WeightFactors
    fe_kind: str
    normalize_reps: bool
    train_set: GraphSet
    seed: int
    anchor_k: int
    profile: DistanceProfile | None = None
    log: tuple[EpochRecord, ...] = ()
    config: TrainConfig | None = None

    def fingerprint(self) -> bytes:
        return content_fingerprint(self.train_set)

    def anchor_graphs(self):
        normal = [self.train_set.graphs[i] for i in self.anchors.normal_indices]
        abnormal = [self.train_set.graphs[i] for i in self.anchors.abnormal_indices]
        return normal, abnormal


def space_distance(tape, batch_a: Sequence[Encoding], batch_b: Sequence[Encoding],
                   w: WeightFactors) -> ad.Tensor:
    """Weighted mean cross-pair distance between two encoding batches.

    Per pair: alpha * ||graph_rep_a - graph_rep_b|| + beta * ||pooled_a -
    pooled_b||, averaged over all |a| x |b| pairs. Returns a 1x1 tensor that
    stays differentiable through the encodings.
    """
    if not batch_a or not batch_b:
        raise DimensionError("space_distance needs non-empty batches")
    parts = []
    if w.alpha != 0.0:
        a = ad.stack_rows(tape, [e.graph_rep for e in batch_a])
        b = ad.stack_rows(tape, [e.graph_rep for e in batch_b])
        parts.append(ad.scale(tape, ad.pairwise_mean_distance(tape, a, b), w.alpha))
    if w.beta != 0.0:
        a = ad.stack_rows(tape, [e.pooled_node_rep for e in batch_a])
        b = ad.stack_rows(tape, [e.pooled_node_rep for e in batch_b])
        parts.append(ad.scale(tape, ad.pairwise_mean_distance(tape, a, b), w.beta))
    if not parts:
        return ad.constant([[0.0]])
    return parts[0] if len(parts) == 1 else ad.add(tape, parts[0], parts[1])


def loss_p(tape, d1: ad.Tensor, d2: ad.Tensor, d3: ad.Tensor,
           cfg: TrainConfig) -> ad.Tensor:
    """Normal-phase loss: d1 - d2 - d3 (d3 dropped under the ablation)."""
    out = ad.sub(tape, d1, d2)
    if not cfg.ablate_drop_dist3:
        out = ad.sub(tape, out, d3)
    return out


def loss_n(tape, d5: ad.Tensor, d4: ad.Tensor, d3: ad.Tensor,
           cfg: TrainConfig) -> ad.Tensor:
    """Abnormal-phase loss: d5 - d4 - d3, the mirror image of loss_p."""
    out = ad.sub(tape, d5, d4)
    if not cfg.ablate_drop_dist3:
        out = ad.sub(tape, out, d3)
    return out


def _batches(order, size):
    for start in range(0, len(order), size):
        yield order[start:start + size]


def train(graph_set: GraphSet, cfg: TrainConfig) -> TrainedModel:
    """Run the full training procedure on a labeled graph set.

    Anchors and channel weights are fixed once, before the epoch loop, on
    the freshly initialized encoder (optionally refreshed per epoch). The
    per-epoch log records the batch-averaged five distances and both
    losses. A non-finite loss or gradient aborts with the last epoch's
    parameters attached as a checkpoint.
    """
    normal, abnormal = split_by_label(graph_set)
    dims = (graph_set.feature_dim(),) + tuple(cfg.hidden_dims)
    params = init_params(dims, derive_seed(cfg.seed, "init"))
    anchors = sample_anchors(graph_set, cfg.anchor_k, derive_seed(cfg.seed, "anchors"))
    profile = representation_distances(graph_set, anchors, params,
                                       fe_kind=cfg.fe_kind,
                                       normalize=cfg.normalize_reps)
    if cfg.ablate_constant_weights:
        weights = WeightFactors(alpha=1.0, beta=1.0)
    else:
        weights = decide_weights(profile)

    adjacency = [ad.normalize_adjacency(g) for g in graph_set.graphs]

    def enc(i, tape):
        return encode(graph_set.graphs[i], params, tape, fe_kind=cfg.fe_kind,
                      normalize=cfg.normalize_reps, adjacency=adjacency[i])

    opt = ad.make_optimizer(cfg.optimizer, cfg.learning_rate)
    log: list[EpochRecord] = []
    checkpoint = params.copy()
    for epoch in range(1, cfg.epochs + 1):
        if cfg.refresh_anchors_per_epoch and epoch > 1:
            anchors = sample_anchors(graph_set, cfg.anchor_k,
                                     derive_seed(cfg.seed, f"anchors-{epoch}"))
            profile = representation_distances(graph_set, anchors, params,
                                               fe_kind=cfg.fe_kind,
                                               normalize=cfg.normalize_reps)
            if not cfg.ablate_constant_weights:
                weights = decide_weights(profile)
        rng = np.random.default_rng(derive_seed(cfg.seed, f"batches-{epoch}"))
        p_order = [normal[i] for i in rng.permutation(len(normal))]
        n_order = [abnormal[i] for i in rng.permutation(len(abnormal))]
        sums = {"d1": 0.0, "d2": 0.0, "d3": 0.0, "d4": 0.0, "d5": 0.0,
                "lp": 0.0, "ln": 0.0}
        p_batches = n_batches = 0
        try:
            for batch in _batches(p_order, cfg.batch_size):
                tape = ad.Tape()
                enc_batch = [enc(i, tape) for i in batch]
                enc_ps = [enc(i, tape) for i in anchors.normal_indices]
                enc_ns = [enc(i, tape) for i in anchors.abnormal_indices]
                d1 = space_distance(tape, enc_batch, enc_ps, weights)
                d2 = space_distance(tape, enc_batch, enc_ns, weights)
                d3 = space_distance(tape, enc_ps, enc_ns, weights)
                loss = loss_p(tape, d1, d2, d3, cfg)
                tape.backward(loss)
                opt.step(params.parameters())
                sums["d1"] += d1.item()
                sums["d2"] += d2.item()
                sums["d3"] += d3.item()
                sums["lp"] += loss.item()
                p_batches += 1
            for batch in _batches(n_order, cfg.batch_size):
                tape = ad.Tape()
                enc_batch = [enc(i, tape) for i in batch]
                enc_ps = [enc(i, tape) for i in anchors.normal_indices]
                enc_ns = [enc(i, tape) for i in anchors.abnormal_indices]
                d4 = space_distance(tape, enc_batch, enc_ps, weights)
                d5 = space_distance(tape, enc_batch, enc_ns, weights)
                d3 = space_distance(tape, enc_ps, enc_ns, weights)
                loss = loss_n(tape, d5, d4, d3, cfg)
                tape.backward(loss)
                opt.step(params.parameters())
                sums["d4"] += d4.item()
                sums["d5"] += d5.item()
                sums["d3"] += d3.item()
                sums["ln"] += loss.item()
                n_batches += 1
        except NonFiniteError as err:
            rescue = TrainedModel(
                params=checkpoint, anchors=anchors, weights=weights,
                fe_kind=cfg.fe_kind, normalize_reps=cfg.normalize_reps,
                train_set=graph_set, seed=cfg.seed, anchor_k=cfg.anchor_k,
                profile=profile, log=tuple(log), config=cfg)
            raise TrainingDivergedError(
                f"training diverged in epoch {epoch}: {err}",
                checkpoint=rescue, epoch=epoch) from err
        log.append(EpochRecord(
            epoch=epoch,
            dist1=sums["d1"] / p_batches,
            dist2=sums["d2"] / p_batches,
            dist3=sums["d3"] / (p_batches + n_batches),
            dist4=sums["d4"] / n_batches,
            dist5=sums["d5"] / n_batches,
            loss_p=sums["lp"] / p_batches,
            loss_n=sums["ln"] / n_batches))
        checkpoint = params.copy()

    return TrainedModel(params=params, anchors=anchors, weights=weights,
                        fe_kind=cfg.fe_kind, normalize_reps=cfg.normalize_reps,
                        train_set=graph_set, seed=cfg.seed, anchor_k=cfg.anchor_k,
                        profile=profile, log=tuple(log), config=cfg)


def write_training_log(log: Sequence[EpochRecord], path) -> None:
    """Training log as CSV: epoch, dist1..dist5, loss_p, loss_n."""
    lines = [EpochRecord.CSV_HEADER]
    lines.extend(rec.csv_row() for rec in log)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
