"""Anchor counting/sampling, the four diagnostic distances, and the
channel-weight rule."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anchorglad.anchors import (
    AnchorSets,
    DistanceProfile,
    anchor_count,
    decide_weights,
    representation_distances,
    sample_anchors,
)
from anchorglad.encoder import encode, init_params
from anchorglad.errors import PartitionError
from anchorglad.graphs import Graph, GraphSet


class TestAnchorCount:
    @pytest.mark.parametrize("size,k,expected", [
        (10, 4, 4),       # 4^1
        (100, 4, 16),     # 4^2
        (1000, 4, 64),    # 4^3
        (63, 4, 16),      # round-half-up: round(1.80) = 2
    ])
    def test_table(self, size, k, expected):
        assert anchor_count(size, k) == expected

    def test_clamped_to_set_size(self):
        assert anchor_count(10, 20) == 10  # 20^1 clamped
        assert anchor_count(5, 10) == 5    # 10^1 clamped

    def test_floor_of_one(self):
        assert anchor_count(1, 4) == 1
        assert anchor_count(3, 9) == 1  # round(log10(3)) = 0

    @given(st.integers(1, 10 ** 6), st.integers(1, 50))
    def test_bounds(self, size, k):
        count = anchor_count(size, k)
        assert 1 <= count <= size

    @given(st.integers(1, 5000), st.integers(1, 20))
    def test_monotone_in_size(self, size, k):
        assert anchor_count(size, k) <= anchor_count(size + 1, k)


def _labeled_set(n_normal, n_abnormal, d_in=1, seed=0):
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_normal + n_abnormal):
        n = int(rng.integers(2, 6))
        edges = tuple((int(rng.integers(0, v)), v) for v in range(1, n))
        graphs.append(Graph(num_nodes=n, edges=edges,
                            features=rng.uniform(0.1, 1.0, (n, d_in)),
                            label=0 if i < n_normal else 1))
    return GraphSet(graphs, anomaly_label=1, name="toy")


class TestSampleAnchors:
    def test_sizes_follow_anchor_count(self):
        gset = _labeled_set(100, 100)
        anchors = sample_anchors(gset, k=4, seed=1)
        assert len(anchors.normal_indices) == 16
        assert len(anchors.abnormal_indices) == 16

    def test_clamped_small_partition(self):
        # raw count 10^round(log10(5)) = 10 exceeds the partition
        gset = _labeled_set(100, 5)
        anchors = sample_anchors(gset, k=10, seed=1)
        assert len(anchors.abnormal_indices) == 5

    def test_without_replacement_and_from_right_partition(self):
        gset = _labeled_set(30, 20)
        anchors = sample_anchors(gset, k=4, seed=2)
        assert len(set(anchors.normal_indices)) == len(anchors.normal_indices)
        assert all(gset.graphs[i].label != 1 for i in anchors.normal_indices)
        assert all(gset.graphs[i].label == 1 for i in anchors.abnormal_indices)

    def test_deterministic(self):
        gset = _labeled_set(50, 50)
        assert sample_anchors(gset, 4, seed=7) == sample_anchors(gset, 4, seed=7)

    def test_empty_partition_errors(self):
        gset = _labeled_set(5, 0)
        with pytest.raises(PartitionError):
            sample_anchors(gset, 4, seed=0)


def brute_force_profile(gset, anchors, params, fe_kind="max", normalize=True):
    """Independent oracle: explicit double loops over all pairs."""
    normal = [i for i, g in enumerate(gset.graphs) if g.label != gset.anomaly_label]
    def channels(i):
        e = encode(gset.graphs[i], params, None, fe_kind=fe_kind,
                   normalize=normalize)
        return e.pooled_node_rep.data[0], e.graph_rep.data[0]
    reps = {i: channels(i) for i in set(normal) | set(anchors.abnormal_indices)}

    def mean_dist(ids_a, ids_b, channel):
        total = 0.0
        for i in ids_a:
            for j in ids_b:
                total += np.linalg.norm(reps[i][channel] - reps[j][channel])
        return total / (len(ids_a) * len(ids_b))

    return DistanceProfile(
        d_pnode=mean_dist(normal, anchors.normal_indices, 0),
        d_pgraph=mean_dist(normal, anchors.normal_indices, 1),
        d_nnode=mean_dist(normal, anchors.abnormal_indices, 0),
        d_ngraph=mean_dist(normal, anchors.abnormal_indices, 1))


class TestRepresentationDistances:
    def test_self_distance_zero(self):
        gset = _labeled_set(1, 1)
        anchors = AnchorSets(normal_indices=(0,), abnormal_indices=(1,),
                             seed=0, ratio_factor_k=1)
        params = init_params((1, 4, 3, 2), seed=0)
        profile = representation_distances(gset, anchors, params)
        # G_P == G_PS == one graph: both P-side entries are self-distances
        assert profile.d_pnode == 0.0
        assert profile.d_pgraph == 0.0

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            gset = _labeled_set(int(rng.integers(2, 8)), int(rng.integers(2, 8)),
                                seed=trial)
            params = init_params((1, 5, 4, 3), seed=trial)
            anchors = sample_anchors(gset, 2, seed=trial)
            got = representation_distances(gset, anchors, params)
            want = brute_force_profile(gset, anchors, params)
            for field in ("d_pnode", "d_pgraph", "d_nnode", "d_ngraph"):
                assert getattr(got, field) == pytest.approx(
                    getattr(want, field), abs=1e-10)

    def test_invariant_to_graph_order(self):
        gset = _labeled_set(6, 6, seed=5)
        params = init_params((1, 5, 4, 3), seed=5)
        anchors = sample_anchors(gset, 2, seed=5)
        base = representation_distances(gset, anchors, params)
        # permute the normal graphs among themselves, remapping anchor indices
        normal = [i for i, g in enumerate(gset.graphs) if g.label != 1]
        perm = list(reversed(normal)) + [i for i, g in enumerate(gset.graphs)
                                         if g.label == 1]
        remap = {old: new for new, old in enumerate(perm)}
        shuffled = GraphSet([gset.graphs[i] for i in perm], 1, "toy")
        anchors2 = AnchorSets(
            normal_indices=tuple(sorted(remap[i] for i in anchors.normal_indices)),
            abnormal_indices=tuple(sorted(remap[i] for i in anchors.abnormal_indices)),
            seed=anchors.seed, ratio_factor_k=anchors.ratio_factor_k)
        again = representation_distances(shuffled, anchors2, params)
        for field in ("d_pnode", "d_pgraph", "d_nnode", "d_ngraph"):
            assert getattr(again, field) == pytest.approx(
                getattr(base, field), abs=1e-12)


class TestDecideWeights:
    def test_node_dominates(self):
        w = decide_weights(DistanceProfile(1.0, 2.0, 5.0, 3.0))
        assert (w.alpha, w.beta) == (0.0, 1.0)

    def test_graph_dominates(self):
        w = decide_weights(DistanceProfile(1.0, 2.0, 1.5, 6.0))
        assert (w.alpha, w.beta) == (1.0, 0.0)

    def test_neither_dominates(self):
        w = decide_weights(DistanceProfile(1.0, 2.0, 2.0, 3.0))
        assert (w.alpha, w.beta) == (0.5, 0.5)

    def test_exact_double_is_not_dominance(self):
        # node_diff = 2, graph_diff = 1: exactly twice -> shared weights
        w = decide_weights(DistanceProfile(1.0, 3.0, 3.0, 4.0))
        assert (w.alpha, w.beta) == (0.5, 0.5)

    @given(st.tuples(*[st.floats(0, 100, allow_nan=False) for _ in range(4)]))
    def test_always_a_valid_choice(self, values):
        w = decide_weights(DistanceProfile(*values))
        assert (w.alpha, w.beta) in {(0.0, 1.0), (1.0, 0.0), (0.5, 0.5)}
        assert w.alpha + w.beta == 1.0
