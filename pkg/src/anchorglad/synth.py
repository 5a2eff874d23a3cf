"""Synthetic corpora for the two anomaly archetypes.

The hexagon corpus exercises structural (graph-level) anomalies: normal
graphs are a 6-cycle with random chords, abnormal graphs have the cycle
broken by rerouting cycle edges through extra nodes. The connectivity
corpus exercises node-level anomalies: normal graphs are connected random
graphs, abnormal graphs have one node cut loose so the graph falls apart.

Labels are 0 = normal, 1 = abnormal; features are raw degree counts. Both
generators are pure functions of their seed.
"""

from __future__ import annotations

import itertools

import numpy as np

from .graphs import Graph, GraphSet, degree_features

_HEX_CYCLE = tuple((i, (i + 1) % 6) for i in range(6))
_HEX_CHORDS = tuple((u, v) for u, v in itertools.combinations(range(6), 2)
                    if (min(u, v), max(u, v)) not in
                    {(min(a, b), max(a, b)) for a, b in _HEX_CYCLE})


def _graph(num_nodes: int, edges, label: int) -> Graph:
    edges = tuple(edges)
    return Graph(num_nodes=num_nodes, edges=edges,
                 features=degree_features(num_nodes, edges), label=label)


def _hexagon_chords(rng) -> list[tuple[int, int]]:
    """3-6 random chords covering every cycle node.

    Full coverage keeps normal graphs free of degree-2 nodes, so the
    degree-2 detour nodes of abnormal graphs are a real anomaly rather
    than a pattern normals also exhibit.
    """
    while True:
        n_chords = int(rng.integers(3, 7))
        picks = rng.choice(len(_HEX_CHORDS), size=n_chords, replace=False)
        chords = [_HEX_CHORDS[i] for i in picks]
        if len({v for e in chords for v in e}) == 6:
            return chords


def _hexagon_normal(rng) -> Graph:
    edges = list(_HEX_CYCLE) + _hexagon_chords(rng)
    return _graph(6, edges, label=0)


def _hexagon_abnormal(rng) -> Graph:
    edges = list(_HEX_CYCLE) + _hexagon_chords(rng)
    n_extra = int(rng.integers(1, 4))
    broken = rng.choice(6, size=n_extra, replace=False)
    for t, cycle_idx in enumerate(broken):
        u, v = _HEX_CYCLE[cycle_idx]
        extra = 6 + t
        edges.remove((u, v))
        edges.append((u, extra))
        edges.append((extra, v))
    return _graph(6 + n_extra, edges, label=1)


def synth_hexagon_corpus(n_normal: int, n_abnormal: int, seed: int) -> GraphSet:
    """Figure-style corpus where abnormal graphs break the hexagonal cycle."""
    if n_normal < 1 or n_abnormal < 1:
        raise ValueError("corpus needs at least one graph per class")
    rng = np.random.default_rng(seed)
    graphs = [_hexagon_normal(rng) for _ in range(n_normal)]
    graphs += [_hexagon_abnormal(rng) for _ in range(n_abnormal)]
    return GraphSet(graphs, anomaly_label=1, name=f"synth-hexagon-{seed}")


def _connected_random(rng) -> tuple[int, list[tuple[int, int]]]:
    """Random recursive tree plus a few extra edges: always connected."""
    n = int(rng.integers(6, 13))
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    present = {(min(u, v), max(u, v)) for u, v in edges}
    candidates = [e for e in itertools.combinations(range(n), 2) if e not in present]
    n_extra = min(int(rng.integers(1, 4)), len(candidates))
    if n_extra:
        picks = rng.choice(len(candidates), size=n_extra, replace=False)
        edges.extend(candidates[i] for i in picks)
    return n, edges


def _disconnect(n: int, edges: list[tuple[int, int]], rng) -> list[tuple[int, int]]:
    """Cut one node loose by removing all of its (at most 4) edges."""
    deg = np.zeros(n, dtype=int)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    eligible = np.flatnonzero(deg <= 4)  # exists: few extras keep min degree small
    victim = int(eligible[np.argmax(deg[eligible])])
    return [(u, v) for u, v in edges if u != victim and v != victim]


def synth_connectivity_corpus(n_normal: int, n_abnormal: int, seed: int) -> GraphSet:
    """Corpus where abnormal graphs lose connectivity (isolated node)."""
    if n_normal < 1 or n_abnormal < 1:
        raise ValueError("corpus needs at least one graph per class")
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(n_normal):
        n, edges = _connected_random(rng)
        graphs.append(_graph(n, edges, label=0))
    for _ in range(n_abnormal):
        n, edges = _connected_random(rng)
        graphs.append(_graph(n, _disconnect(n, edges, rng), label=1))
    return GraphSet(graphs, anomaly_label=1, name=f"synth-connectivity-{seed}")


def connected_components(graph: Graph) -> int:
    """Component count by union-find; used by tests and corpus checks."""
    parent = list(range(graph.num_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in graph.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(i) for i in range(graph.num_nodes)})
