"""Graph containers, TUDataset text ingestion, and fold planning.

The on-disk format is the plain-text TUDataset layout: ``<DS>_A.txt`` holds
one edge per line as 1-based, comma-separated node ids with both directions
present; ``<DS>_graph_indicator.txt`` maps node t (1-based line number) to
its graph id; ``<DS>_graph_labels.txt`` has one integer per graph; optional
``<DS>_node_labels.txt`` / ``<DS>_node_attributes.txt`` carry per-node
discrete labels / real-valued vectors. Everything is 0-based in memory.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DatasetError,
    MalformedDatasetError,
    PartitionError,
    StratificationError,
)

FEATURE_MODES = ("auto", "attributes", "labels", "degree")


@dataclass(eq=False)
class Graph:
    """One undirected attributed graph.

    Edges are canonical: 0-based, (lo, hi) sorted within each pair, the list
    sorted and duplicate-free, no self-loops. ``features`` is num_nodes x d
    float64.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    features: np.ndarray
    label: int

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("graphs have at least one node")
        self.edges = canonical_edges(self.edges, self.num_nodes)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != self.num_nodes:
            raise ValueError(
                f"features must be {self.num_nodes} x d, got {self.features.shape}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and self.edges == other.edges
                and self.label == other.label
                and self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features))


def canonical_edges(edges, num_nodes: int) -> tuple[tuple[int, int], ...]:
    """Deduplicate, symmetrize and sort an undirected edge list."""
    seen = set()
    for u, v in edges:
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ValueError(f"edge ({u}, {v}) outside [0, {num_nodes})")
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        seen.add((min(u, v), max(u, v)))
    return tuple(sorted(seen))


@dataclass(eq=False)
class GraphSet:
    """An ordered collection of graphs plus the anomaly-label orientation.

    Graphs whose label equals ``anomaly_label`` form the abnormal partition;
    all others are normal. The orientation is data, not a judgement: the
    same graphs are evaluated under both orientations.
    """

    graphs: list[Graph]
    anomaly_label: int
    name: str = ""

    def __post_init__(self):
        dims = {g.features.shape[1] for g in self.graphs}
        if len(dims) > 1:
            raise ValueError(f"feature dimension differs across graphs: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.graphs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphSet):
            return NotImplemented
        return (self.anomaly_label == other.anomaly_label
                and len(self.graphs) == len(other.graphs)
                and all(a == b for a, b in zip(self.graphs, other.graphs)))

    def feature_dim(self) -> int:
        return int(self.graphs[0].features.shape[1]) if self.graphs else 0

    def with_anomaly_label(self, anomaly_label: int) -> "GraphSet":
        return GraphSet(self.graphs, anomaly_label, self.name)

    def subset(self, indices, name: str = "") -> "GraphSet":
        return GraphSet([self.graphs[i] for i in indices], self.anomaly_label,
                        name or self.name)


@dataclass(frozen=True)
class FoldPlan:
    """Stratified fold assignment: per-graph fold index in [0, k)."""

    k: int
    assignments: tuple[int, ...]
    seed: int

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, a in enumerate(self.assignments) if a != fold]

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, a in enumerate(self.assignments) if a == fold]

    def digest(self) -> str:
        raw = f"{self.k}:{self.seed}:" + ",".join(map(str, self.assignments))
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


def degree_features(num_nodes: int, edges) -> np.ndarray:
    """num_nodes x 1 matrix of raw degree counts."""
    deg = np.zeros((num_nodes, 1))
    for u, v in edges:
        deg[u, 0] += 1
        deg[v, 0] += 1
    return deg


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise DatasetError(f"missing required file: {path}")
    return [ln.strip() for ln in path.read_text().splitlines()]


def _parse_int(path: Path, lineno: int, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedDatasetError(f"{path}:{lineno}: expected integer, got {text!r}")


def load_tudataset(dir_path, dataset_name: str, feature_mode: str = "auto") -> GraphSet:
    """Parse a TUDataset-format directory into a GraphSet.

    Node features come from ``feature_mode``: "auto" prefers node attributes
    concatenated with one-hot node labels when both files exist, then
    attributes, then one-hot labels, then raw degree counts. Explicit modes
    require the matching file. Graph labels are remapped to dense 0-based
    integers (sorted by raw value), so e.g. a -1/+1 labelling becomes 0/1.
    """
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
    base = Path(dir_path)
    a_path = base / f"{dataset_name}_A.txt"
    ind_path = base / f"{dataset_name}_graph_indicator.txt"
    lab_path = base / f"{dataset_name}_graph_labels.txt"

    indicator = [_parse_int(ind_path, i + 1, ln)
                 for i, ln in enumerate(_read_lines(ind_path)) if ln]
    raw_labels = [_parse_int(lab_path, i + 1, ln)
                  for i, ln in enumerate(_read_lines(lab_path)) if ln]
    num_graphs = len(raw_labels)
    num_nodes_total = len(indicator)

    nodes_of_graph: dict[int, list[int]] = defaultdict(list)
    for node0, gid in enumerate(indicator):
        if not (1 <= gid <= num_graphs):
            raise MalformedDatasetError(
                f"{ind_path}:{node0 + 1}: graph id {gid} outside 1..{num_graphs}")
        nodes_of_graph[gid].append(node0)

    graph_of_node = np.asarray(indicator)
    local_index = np.zeros(num_nodes_total, dtype=np.int64)
    for gid in range(1, num_graphs + 1):
        for local, node0 in enumerate(nodes_of_graph[gid]):
            local_index[node0] = local

    edges_of_graph: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for lineno, ln in enumerate(_read_lines(a_path), start=1):
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != 2:
            raise MalformedDatasetError(f"{a_path}:{lineno}: expected 'i, j', got {ln!r}")
        u = _parse_int(a_path, lineno, parts[0].strip()) - 1
        v = _parse_int(a_path, lineno, parts[1].strip()) - 1
        for x in (u, v):
            if not (0 <= x < num_nodes_total):
                raise MalformedDatasetError(
                    f"{a_path}:{lineno}: node {x + 1} outside 1..{num_nodes_total}")
        if graph_of_node[u] != graph_of_node[v]:
            raise MalformedDatasetError(
                f"{a_path}:{lineno}: edge ({u + 1}, {v + 1}) crosses graphs "
                f"{graph_of_node[u]} and {graph_of_node[v]}")
        if u == v:
            continue  # stray self-loops are dropped; normalization re-adds its own
        edges_of_graph[int(graph_of_node[u])].append(
            (int(local_index[u]), int(local_index[v])))

    for gid in list(edges_of_graph):
        edges_of_graph[gid] = canonical_edges(edges_of_graph[gid],
                                              len(nodes_of_graph[gid]))

    node_labels = _load_node_labels(base, dataset_name, num_nodes_total)
    node_attrs = _load_node_attributes(base, dataset_name, num_nodes_total)
    features = _build_features(feature_mode, node_labels, node_attrs,
                               nodes_of_graph, edges_of_graph, num_graphs,
                               base, dataset_name)

    label_map = {raw: dense for dense, raw in enumerate(sorted(set(raw_labels)))}
    graphs = []
    for gid in range(1, num_graphs + 1):
        n = len(nodes_of_graph[gid])
        if n == 0:
            raise MalformedDatasetError(
                f"{ind_path}: graph {gid} has no nodes")
        graphs.append(Graph(num_nodes=n,
                            edges=tuple(edges_of_graph.get(gid, ())),
                            features=features[gid],
                            label=label_map[raw_labels[gid - 1]]))
    return GraphSet(graphs, anomaly_label=1, name=dataset_name)


def _load_node_labels(base: Path, name: str, n_total: int):
    path = base / f"{name}_node_labels.txt"
    if not path.is_file():
        return None
    values = [_parse_int(path, i + 1, ln)
              for i, ln in enumerate(_read_lines(path)) if ln]
    if len(values) != n_total:
        raise MalformedDatasetError(
            f"{path}: {len(values)} node labels for {n_total} nodes")
    return values


def _load_node_attributes(base: Path, name: str, n_total: int):
    path = base / f"{name}_node_attributes.txt"
    if not path.is_file():
        return None
    rows = []
    width = None
    for lineno, ln in enumerate(_read_lines(path), start=1):
        if not ln:
            continue
        try:
            row = [float(x) for x in ln.split(",")]
        except ValueError:
            raise MalformedDatasetError(f"{path}:{lineno}: bad attribute row {ln!r}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MalformedDatasetError(
                f"{path}:{lineno}: expected {width} attributes, got {len(row)}")
        rows.append(row)
    if len(rows) != n_total:
        raise MalformedDatasetError(
            f"{path}: {len(rows)} attribute rows for {n_total} nodes")
    return np.asarray(rows)


def _build_features(mode, node_labels, node_attrs, nodes_of_graph,
                    edges_of_graph, num_graphs, base, name):
    """Per-graph feature matrices keyed by 1-based graph id."""
    use_attrs = node_attrs is not None and mode in ("auto", "attributes")
    use_labels = node_labels is not None and mode in ("auto", "labels")
    if mode == "attributes" and node_attrs is None:
        raise DatasetError(f"feature_mode=attributes but {name}_node_attributes.txt missing")
    if mode == "labels" and node_labels is None:
        raise DatasetError(f"feature_mode=labels but {name}_node_labels.txt missing")

    onehot = None
    if use_labels:
        cats = {c: i for i, c in enumerate(sorted(set(node_labels)))}
        onehot = np.zeros((len(node_labels), len(cats)))
        for node0, lab in enumerate(node_labels):
            onehot[node0, cats[lab]] = 1.0

    out = {}
    for gid in range(1, num_graphs + 1):
        nodes = nodes_of_graph[gid]
        if use_attrs and use_labels:
            out[gid] = np.hstack([node_attrs[nodes], onehot[nodes]])
        elif use_attrs:
            out[gid] = node_attrs[nodes]
        elif use_labels:
            out[gid] = onehot[nodes]
        else:
            out[gid] = degree_features(len(nodes), edges_of_graph.get(gid, ()))
    return out


def save_tudataset(graph_set: GraphSet, dir_path, dataset_name: str) -> None:
    """Write a GraphSet as TUDataset text, round-trippable by load_tudataset.

    Features are always emitted as node attributes (full-precision reprs),
    so whatever feature source produced them survives a reload bit-exactly.
    """
    base = Path(dir_path)
    base.mkdir(parents=True, exist_ok=True)
    a_lines: list[str] = []
    ind_lines: list[str] = []
    lab_lines: list[str] = []
    attr_lines: list[str] = []
    offset = 0
    for gid, g in enumerate(graph_set.graphs, start=1):
        for u, v in g.edges:
            a_lines.append(f"{offset + u + 1}, {offset + v + 1}")
            a_lines.append(f"{offset + v + 1}, {offset + u + 1}")
        ind_lines.extend([str(gid)] * g.num_nodes)
        lab_lines.append(str(g.label))
        for row in g.features:
            attr_lines.append(", ".join(repr(float(x)) for x in row))
        offset += g.num_nodes
    (base / f"{dataset_name}_A.txt").write_text("\n".join(a_lines) + ("\n" if a_lines else ""))
    (base / f"{dataset_name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (base / f"{dataset_name}_graph_labels.txt").write_text("\n".join(lab_lines) + "\n")
    (base / f"{dataset_name}_node_attributes.txt").write_text("\n".join(attr_lines) + "\n")


def split_by_label(graph_set: GraphSet) -> tuple[list[int], list[int]]:
    """Indices of (normal, abnormal) graphs under the set's orientation."""
    normal = [i for i, g in enumerate(graph_set.graphs)
              if g.label != graph_set.anomaly_label]
    abnormal = [i for i, g in enumerate(graph_set.graphs)
                if g.label == graph_set.anomaly_label]
    if not normal or not abnormal:
        side = "normal" if not normal else "abnormal"
        raise PartitionError(
            f"{graph_set.name or 'graph set'}: {side} partition is empty for "
            f"anomaly_label={graph_set.anomaly_label}")
    return normal, abnormal


def make_folds(graph_set: GraphSet, k: int, seed: int) -> FoldPlan:
    """Stratified k-fold assignment over the normal/abnormal partition.

    Within each side the graphs are shuffled once and dealt round-robin, so
    fold sizes per side differ by at most one and no fold is anomaly-free.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    normal, abnormal = split_by_label(graph_set)
    for side_name, side in (("normal", normal), ("abnormal", abnormal)):
        if len(side) < k:
            raise StratificationError(
                f"{side_name} class has {len(side)} graphs, fewer than k={k}")
    rng = np.random.default_rng(seed)
    assignments = [0] * len(graph_set.graphs)
    for side in (normal, abnormal):
        order = rng.permutation(len(side))
        for pos, j in enumerate(order):
            assignments[side[j]] = pos % k
    return FoldPlan(k=k, assignments=tuple(assignments), seed=seed)


def content_fingerprint(graph_set: GraphSet) -> bytes:
    """32-byte digest of graph content (order-sensitive), used to bind
    persisted anchor indices to their source set."""
    h = hashlib.sha256()
    h.update(len(graph_set.graphs).to_bytes(8, "little"))
    for g in graph_set.graphs:
        h.update(g.num_nodes.to_bytes(8, "little"))
        h.update(int(g.label).to_bytes(8, "little", signed=True))
        for u, v in g.edges:
            h.update(u.to_bytes(4, "little"))
            h.update(v.to_bytes(4, "little"))
        h.update(np.ascontiguousarray(g.features).tobytes())
    return h.digest()
