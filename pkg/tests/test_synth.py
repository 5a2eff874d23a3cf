"""Synthetic corpus generators: construction guarantees and determinism."""

import numpy as np

from anchorglad.synth import (
    connected_components,
    synth_connectivity_corpus,
    synth_hexagon_corpus,
)


def has_six_cycle(graph):
    """True if nodes 0..5 form the hexagonal cycle (possibly rerouted away)."""
    edges = set(graph.edges)
    return all((min(i, (i + 1) % 6), max(i, (i + 1) % 6)) in edges
               for i in range(6))


class TestHexagonCorpus:
    def test_single_normal_contains_six_cycle(self):
        gset = synth_hexagon_corpus(1, 1, seed=4)
        normal = gset.graphs[0]
        assert normal.num_nodes == 6
        assert has_six_cycle(normal)

    def test_abnormal_node_counts(self):
        gset = synth_hexagon_corpus(1, 50, seed=5)
        for g in gset.graphs[1:]:
            assert g.num_nodes in {7, 8, 9}
            assert not has_six_cycle(g)  # the cycle is broken

    def test_labels_and_features(self):
        gset = synth_hexagon_corpus(3, 4, seed=6)
        assert [g.label for g in gset.graphs] == [0] * 3 + [1] * 4
        assert gset.anomaly_label == 1
        for g in gset.graphs:
            deg = np.zeros((g.num_nodes, 1))
            for u, v in g.edges:
                deg[u] += 1
                deg[v] += 1
            assert np.array_equal(g.features, deg)

    def test_deterministic(self):
        assert synth_hexagon_corpus(10, 10, 7) == synth_hexagon_corpus(10, 10, 7)

    def test_rejects_empty_class(self):
        import pytest
        with pytest.raises(ValueError):
            synth_hexagon_corpus(0, 5, seed=1)


class TestConnectivityCorpus:
    def test_normals_connected_abnormals_not(self):
        gset = synth_connectivity_corpus(60, 60, seed=8)
        for g in gset.graphs:
            components = connected_components(g)
            if g.label == 0:
                assert components == 1
            else:
                assert components >= 2

    def test_node_counts_in_range(self):
        gset = synth_connectivity_corpus(30, 30, seed=9)
        assert all(6 <= g.num_nodes <= 12 for g in gset.graphs)

    def test_abnormal_removed_one_to_four_edges(self):
        # regenerate pairs: abnormal graph comes from a connected draw minus
        # the victim's incident edges, so its edge deficit is 1..4
        gset = synth_connectivity_corpus(1, 40, seed=10)
        for g in gset.graphs[1:]:
            degrees = np.zeros(g.num_nodes, dtype=int)
            for u, v in g.edges:
                degrees[u] += 1
                degrees[v] += 1
            isolated = np.flatnonzero(degrees == 0)
            assert isolated.size >= 1  # the cut-loose victim

    def test_deterministic(self):
        a = synth_connectivity_corpus(12, 12, seed=11)
        b = synth_connectivity_corpus(12, 12, seed=11)
        assert a == b
