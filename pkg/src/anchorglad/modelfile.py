"""Binary model persistence.

Layout (all little-endian): 8-byte magic, u32 format version, u8 fe_kind
(0=max, 1=mean), u8 normalize flag, f64 alpha, f64 beta, i64 training
seed, i64 anchor ratio factor k, u32 dim count + i64 dims, u32 layer count
+ per layer the weight then the bias (each as u32 rows, u32 cols,
row-major f64 data), u32-counted anchor index lists (normal then
abnormal), and the 32-byte content fingerprint of the training set.
Anchors are stored as indices, so loading needs the original training
set; the fingerprint guards against rebinding to the wrong data.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .anchors import AnchorSets, WeightFactors
from .encoder import FE_KINDS, ModelParams
from .errors import ModelFileError
from .graphs import GraphSet, content_fingerprint
from .training import TrainedModel
from . import autodiff as ad

MAGIC = b"AGLDMDL1"
FORMAT_VERSION = 1


def save_model(model: TrainedModel, path) -> None:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    parts.append(struct.pack("<BB", FE_KINDS.index(model.fe_kind),
                             1 if model.normalize_reps else 0))
    parts.append(struct.pack("<dd", model.weights.alpha, model.weights.beta))
    parts.append(struct.pack("<qq", model.seed, model.anchor_k))
    dims = model.params.dims
    parts.append(struct.pack("<I", len(dims)))
    parts.append(struct.pack(f"<{len(dims)}q", *dims))
    parts.append(struct.pack("<I", len(model.params.layer_weights)))
    for w, b in zip(model.params.layer_weights, model.params.layer_biases):
        for t in (w, b):
            parts.append(struct.pack("<II", t.rows, t.cols))
            parts.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    for indices in (model.anchors.normal_indices, model.anchors.abnormal_indices):
        parts.append(struct.pack("<I", len(indices)))
        parts.append(struct.pack(f"<{len(indices)}I", *indices))
    parts.append(model.fingerprint())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.path = path
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise ModelFileError(f"{self.path}: truncated model file")
        out = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return out

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.blob):
            raise ModelFileError(f"{self.path}: truncated model file")
        out = self.blob[self.pos:self.pos + size]
        self.pos += size
        return out


def load_model(path, train_set: GraphSet) -> TrainedModel:
    """Rebind a persisted model to its training set.

    Raises ModelFileError on a bad magic/version, a truncated file, or a
    training set whose content fingerprint does not match the one stored
    at save time.
    """
    r = _Reader(Path(path).read_bytes(), path)
    if r.raw(len(MAGIC)) != MAGIC:
        raise ModelFileError(f"{path}: bad magic, not a model file")
    (version,) = r.take("<I")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: unsupported format version {version}")
    fe_idx, norm_flag = r.take("<BB")
    if fe_idx >= len(FE_KINDS):
        raise ModelFileError(f"{path}: unknown fe kind {fe_idx}")
    alpha, beta = r.take("<dd")
    seed, anchor_k = r.take("<qq")
    (n_dims,) = r.take("<I")
    dims = tuple(r.take(f"<{n_dims}q"))
    (n_layers,) = r.take("<I")
    weights, biases = [], []
    for _ in range(n_layers):
        for sink in (weights, biases):
            rows, cols = r.take("<II")
            data = np.frombuffer(r.raw(rows * cols * 8), dtype="<f8")
            sink.append(ad.parameter(data.reshape(rows, cols).copy()))
    (n_norm,) = r.take("<I")
    normal_idx = tuple(r.take(f"<{n_norm}I"))
    (n_abn,) = r.take("<I")
    abnormal_idx = tuple(r.take(f"<{n_abn}I"))
    fingerprint = r.raw(32)
    if fingerprint != content_fingerprint(train_set):
        raise ModelFileError(
            f"{path}: training-set fingerprint mismatch; pass the exact "
            "dataset the model was trained on")
    for i in normal_idx + abnormal_idx:
        if i >= len(train_set.graphs):
            raise ModelFileError(f"{path}: anchor index {i} out of range")
    return TrainedModel(
        params=ModelParams(layer_weights=weights, layer_biases=biases, dims=dims),
        anchors=AnchorSets(normal_indices=normal_idx,
                           abnormal_indices=abnormal_idx,
                           seed=seed, ratio_factor_k=anchor_k),
        weights=WeightFactors(alpha=alpha, beta=beta),
        fe_kind=FE_KINDS[fe_idx],
        normalize_reps=bool(norm_flag),
        train_set=train_set,
        seed=seed,
        anchor_k=anchor_k)
