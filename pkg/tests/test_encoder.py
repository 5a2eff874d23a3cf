"""Encoder semantics: propagation, pooling channels, init statistics."""

import numpy as np
import pytest

import anchorglad.autodiff as ad
from anchorglad.encoder import encode, init_params, pool_nodes_fe
from anchorglad.errors import DimensionError
from anchorglad.graphs import Graph


def random_graph(rng, d_in=1, n_lo=3, n_hi=9):
    n = int(rng.integers(n_lo, n_hi))
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    feats = rng.uniform(0.1, 2.0, size=(n, d_in))
    return Graph(num_nodes=n, edges=tuple(edges), features=feats, label=0)


class TestInitParams:
    def test_deterministic(self):
        a = init_params((1, 64, 32), seed=5)
        b = init_params((1, 64, 32), seed=5)
        for ta, tb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(ta.data, tb.data)

    def test_shapes(self):
        params = init_params((1, 64, 32), seed=0)
        assert [w.data.shape for w in params.layer_weights] == [(1, 64), (64, 32)]
        assert [b.data.shape for b in params.layer_biases] == [(1, 64), (1, 32)]

    def test_too_shallow_rejected(self):
        with pytest.raises(ValueError):
            init_params((4, 8), seed=0)

    def test_weight_variance_matches_glorot(self):
        # sampling oracle: Var(U(-L, L)) = L^2/3 = 2/(fan_in+fan_out)
        draws = []
        for seed in range(1000):
            draws.append(init_params((3, 5, 4), seed=seed).layer_weights[0].data)
        empirical = np.var(np.stack(draws))
        assert empirical == pytest.approx(2.0 / (3 + 5), rel=0.2)


class TestPoolNodesFe:
    def test_max(self):
        out = pool_nodes_fe(None, ad.constant([[1.0, 0.0], [0.0, 1.0]]), "max")
        assert np.array_equal(out.data, [[1.0, 1.0]])

    def test_single_row(self):
        out = pool_nodes_fe(None, ad.constant([[0.25, -3.0]]), "max")
        assert np.array_equal(out.data, [[0.25, -3.0]])

    def test_mean(self):
        out = pool_nodes_fe(None, ad.constant([[1.0, 0.0], [0.0, 1.0]]), "mean")
        assert np.array_equal(out.data, [[0.5, 0.5]])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            pool_nodes_fe(None, ad.constant([[1.0]]), "median")


class TestEncode:
    def test_single_node_matches_numpy_mirror(self):
        # A_hat = [[1]], so each layer is relu(x W + b); mirror it directly
        rng = np.random.default_rng(3)
        g = Graph(num_nodes=1, edges=(), features=rng.uniform(0.5, 1.5, (1, 2)),
                  label=0)
        params = init_params((2, 4, 3, 2), seed=9)
        enc = encode(g, params, None, normalize=False)
        h = g.features
        for l, (w, b) in enumerate(zip(params.layer_weights, params.layer_biases)):
            h = h @ w.data + b.data
            if l < 2:
                h = np.maximum(h, 0.0)
            if l == 1:
                assert np.allclose(enc.node_reps.data, h, atol=1e-12)
        assert np.allclose(enc.graph_rep.data, h, atol=1e-12)

    def test_feature_dim_mismatch(self):
        g = Graph(num_nodes=2, edges=((0, 1),), features=np.ones((2, 3)), label=0)
        params = init_params((2, 4, 4), seed=0)
        with pytest.raises(DimensionError, match="3 columns.*expects 2"):
            encode(g, params, None)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        params = init_params((2, 8, 6, 4), seed=1)
        for _ in range(20):
            g = random_graph(rng, d_in=2)
            perm = rng.permutation(g.num_nodes)
            inv = np.argsort(perm)
            permuted = Graph(
                num_nodes=g.num_nodes,
                edges=tuple((int(inv[u]), int(inv[v])) for u, v in g.edges),
                features=g.features[perm],
                label=g.label)
            e1 = encode(g, params, None)
            e2 = encode(permuted, params, None)
            assert np.allclose(e1.graph_rep.data, e2.graph_rep.data, atol=1e-12)
            assert np.allclose(e1.pooled_node_rep.data, e2.pooled_node_rep.data,
                               atol=1e-12)

    def test_isomorphic_duplicates_identical(self):
        rng = np.random.default_rng(5)
        g = random_graph(rng, d_in=1)
        twin = Graph(num_nodes=g.num_nodes, edges=g.edges,
                     features=g.features.copy(), label=g.label)
        params = init_params((1, 8, 6, 4), seed=2)
        e1, e2 = encode(g, params, None), encode(twin, params, None)
        assert np.array_equal(e1.graph_rep.data, e2.graph_rep.data)
        assert np.array_equal(e1.pooled_node_rep.data, e2.pooled_node_rep.data)

    def test_outputs_unit_norm_when_normalized(self):
        rng = np.random.default_rng(6)
        params = init_params((1, 8, 6, 4), seed=3)
        for _ in range(20):
            e = encode(random_graph(rng), params, None, normalize=True)
            for rep in (e.graph_rep, e.pooled_node_rep):
                norm = np.linalg.norm(rep.data)
                assert norm == 0.0 or abs(norm - 1.0) < 1e-9

    def test_gradient_through_encoding(self):
        rng = np.random.default_rng(7)
        params = init_params((1, 5, 4, 3), seed=4)
        g = random_graph(rng)

        def f(tape):
            e = encode(g, params, tape)
            return ad.add(tape, ad.sum_all(tape, e.graph_rep),
                          ad.sum_all(tape, e.pooled_node_rep))

        err = ad.finite_diff_check(f, params.parameters(), h=1e-5)
        assert err < 1e-4

    def test_fe_mean_changes_node_channel_only(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng)
        params = init_params((1, 6, 5, 4), seed=5)
        e_max = encode(g, params, None, fe_kind="max")
        e_mean = encode(g, params, None, fe_kind="mean")
        assert np.array_equal(e_max.graph_rep.data, e_mean.graph_rep.data)
