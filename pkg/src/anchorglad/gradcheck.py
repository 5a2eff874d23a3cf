"""Finite-difference verification of every differentiable op and of the
composite training losses.

Inputs are sampled away from nondifferentiable points (ReLU kinks, pooling
ties, coincident pairs, the normalization clamp); the composite check
mirrors a real training batch, including anchor graphs that also appear in
the batch (their self-pairs are constant zero, hence safe). The suite is
deterministic in its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .anchors import WeightFactors, sample_anchors
from .encoder import encode, init_params
from .graphs import Graph, GraphSet
from .seeding import derive_seed
from .training import TrainConfig, loss_n, loss_p, space_distance

TOLERANCE = 1e-4
_FD_STEP = 1e-5


@dataclass
class GradcheckReport:
    worst_by_check: dict[str, float]
    trials: int

    @property
    def worst(self) -> float:
        return max(self.worst_by_check.values())

    @property
    def passed(self) -> bool:
        return self.worst < TOLERANCE

    def lines(self):
        for name in sorted(self.worst_by_check):
            err = self.worst_by_check[name]
            flag = "ok" if err < TOLERANCE else "FAIL"
            yield f"{name:24s} worst rel. error {err:.3e}  [{flag}]"


def _sep_rows(rng, rows, cols):
    """Random matrix with well-separated entries: no near-ties in any
    column and nothing near zero."""
    while True:
        m = rng.uniform(-2.0, 2.0, size=(rows, cols))
        if np.min(np.abs(m)) < 1e-2:
            continue
        if rows > 1:
            s = np.sort(m, axis=0)
            if np.min(s[1:] - s[:-1]) < 1e-2:
                continue
        return m


def _check(f, params, h=_FD_STEP):
    return ad.finite_diff_check(f, params, h=h)


def _matmul_case(rng):
    a = ad.parameter(rng.normal(size=(3, 4)))
    b = ad.parameter(rng.normal(size=(4, 2)))
    return lambda tape: ad.sum_all(tape, ad.matmul(tape, a, b)), [a, b]


def _add_case(rng):
    a = ad.parameter(rng.normal(size=(3, 3)))
    b = ad.parameter(rng.normal(size=(3, 3)))
    return lambda tape: ad.sum_all(tape, ad.add(tape, a, b)), [a, b]


def _sub_case(rng):
    a = ad.parameter(rng.normal(size=(2, 5)))
    b = ad.parameter(rng.normal(size=(2, 5)))
    return lambda tape: ad.sum_all(tape, ad.sub(tape, a, b)), [a, b]


def _mul_case(rng):
    a = ad.parameter(rng.normal(size=(4, 2)))
    b = ad.parameter(rng.normal(size=(4, 2)))
    return lambda tape: ad.sum_all(tape, ad.mul(tape, a, b)), [a, b]


def _scale_case(rng):
    a = ad.parameter(rng.normal(size=(3, 3)))
    c = float(rng.uniform(0.5, 2.0))
    return lambda tape: ad.sum_all(tape, ad.scale(tape, a, c)), [a]


def _relu_case(rng):
    # entries bounded away from the kink
    x = ad.parameter(_sep_rows(rng, 4, 3))
    return lambda tape: ad.sum_all(tape, ad.relu(tape, x)), [x]


def _add_row_bias_case(rng):
    h = ad.parameter(rng.normal(size=(4, 3)))
    b = ad.parameter(rng.normal(size=(1, 3)))
    weight = ad.constant(rng.normal(size=(3, 1)))
    return (lambda tape: ad.sum_all(
        tape, ad.matmul(tape, ad.add_row_bias(tape, h, b), weight)), [h, b])


def _row_max_pool_case(rng):
    h = ad.parameter(_sep_rows(rng, 5, 4))
    return lambda tape: ad.sum_all(tape, ad.row_max_pool(tape, h)), [h]


def _row_mean_pool_case(rng):
    h = ad.parameter(rng.normal(size=(5, 4)))
    return lambda tape: ad.sum_all(tape, ad.row_mean_pool(tape, h)), [h]


def _l2_normalize_case(rng):
    h = ad.parameter(rng.normal(size=(4, 3)) + np.sign(rng.normal(size=(4, 3))))
    weight = ad.constant(rng.normal(size=(3, 1)))
    return (lambda tape: ad.sum_all(
        tape, ad.matmul(tape, ad.l2_normalize_rows(tape, h), weight)), [h])


def _stack_rows_case(rng):
    rows = [ad.parameter(rng.normal(size=(1, 3))) for _ in range(4)]
    weight = ad.constant(rng.normal(size=(3, 1)))
    return (lambda tape: ad.sum_all(
        tape, ad.matmul(tape, ad.stack_rows(tape, rows), weight)), rows)


def _pairwise_case(rng):
    # keep cross pairs clearly separated so sqrt stays smooth
    a = ad.parameter(rng.normal(size=(3, 4)))
    b = ad.parameter(rng.normal(size=(4, 4)) + 4.0)
    return lambda tape: ad.pairwise_mean_distance(tape, a, b), [a, b]


_OP_CASES = {
    "matmul": _matmul_case,
    "add": _add_case,
    "sub": _sub_case,
    "mul": _mul_case,
    "scale": _scale_case,
    "relu": _relu_case,
    "add_row_bias": _add_row_bias_case,
    "row_max_pool": _row_max_pool_case,
    "row_mean_pool": _row_mean_pool_case,
    "l2_normalize_rows": _l2_normalize_case,
    "stack_rows": _stack_rows_case,
    "pairwise_mean_distance": _pairwise_case,
}


def _random_graph(rng, d_in: int) -> Graph:
    n = int(rng.integers(2, 11))
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    # positive, well-spread features keep the first layer alive
    feats = rng.uniform(0.2, 2.0, size=(n, d_in))
    return Graph(num_nodes=n, edges=tuple(edges), features=feats,
                 label=int(rng.integers(0, 2)))


def _margins_ok(graphs, params, fe_kind: str) -> bool:
    """Numpy mirror of the encoder forward; rejects samples near ReLU
    kinks, pooling ties, or the normalization clamp."""
    graph_reps, node_reps = [], []
    for g in graphs:
        n = g.num_nodes
        a = np.zeros((n, n))
        for u, v in g.edges:
            a[u, v] = a[v, u] = 1.0
        a += np.eye(n)
        inv = 1.0 / np.sqrt(a.sum(axis=1))
        a_hat = a * inv[:, None] * inv[None, :]
        h = g.features
        last = len(params.layer_weights) - 1
        node_h = None
        for l, (w, b) in enumerate(zip(params.layer_weights, params.layer_biases)):
            pre = a_hat @ h @ w.data + b.data
            if l < last:
                if np.min(np.abs(pre)) < 1e-3:
                    return False
                h = np.maximum(pre, 0.0)
            else:
                h = pre
            if l == last - 1:
                node_h = h
        for mat, pool, sink in ((h, "max", graph_reps), (node_h, fe_kind, node_reps)):
            if pool == "max" and mat.shape[0] > 1:
                # exact ties are automorphic twins that move together under
                # any weight perturbation; only near-ties break the check
                top2 = np.sort(mat, axis=0)[-2:, :]
                gap = top2[1] - top2[0]
                if np.any((gap > 1e-12) & (gap < 1e-3)):
                    return False
            pooled = mat.max(axis=0) if pool == "max" else mat.mean(axis=0)
            if np.linalg.norm(pooled) < 2e-2:
                return False
            sink.append(pooled / np.linalg.norm(pooled))
    for reps in (np.array(graph_reps), np.array(node_reps)):
        dist = np.linalg.norm(reps[:, None, :] - reps[None, :, :], axis=2)
        off = dist[~np.eye(len(reps), dtype=bool)]
        if off.size and np.min(off) < 2e-2:
            return False
    return True


_WEIGHT_CHOICES = (WeightFactors(0.5, 0.5), WeightFactors(1.0, 0.0),
                   WeightFactors(0.0, 1.0), WeightFactors(1.0, 1.0))


def _composite_case(rng, which: str):
    """A faithful mini training batch: loss_p or loss_n through the
    encoder, anchors included."""
    d_in = 3
    dims = (d_in, 6, 5, 4)
    cfg = TrainConfig(epochs=1, seed=0, hidden_dims=dims[1:], batch_size=8)
    fe_kind = "max" if rng.integers(0, 2) else "mean"
    for _ in range(60):
        n_per_class = int(rng.integers(2, 5))
        graphs = [_random_graph(rng, d_in) for _ in range(2 * n_per_class)]
        for i, g in enumerate(graphs):
            g.label = 0 if i < n_per_class else 1
        gset = GraphSet(graphs, anomaly_label=1, name="gradcheck")
        params = init_params(dims, int(rng.integers(0, 2 ** 31)))
        if _margins_ok(graphs, params, fe_kind):
            break
    else:
        raise RuntimeError("could not sample a margin-safe composite case")
    anchors = sample_anchors(gset, 2, int(rng.integers(0, 2 ** 31)))
    w = _WEIGHT_CHOICES[int(rng.integers(0, len(_WEIGHT_CHOICES)))]
    batch_idx = list(range(n_per_class)) if which == "loss_p" else \
        list(range(n_per_class, 2 * n_per_class))

    def f(tape):
        def enc(i):
            return encode(gset.graphs[i], params, tape, fe_kind=fe_kind)
        batch = [enc(i) for i in batch_idx]
        enc_ps = [enc(i) for i in anchors.normal_indices]
        enc_ns = [enc(i) for i in anchors.abnormal_indices]
        if which == "loss_p":
            d1 = space_distance(tape, batch, enc_ps, w)
            d2 = space_distance(tape, batch, enc_ns, w)
            d3 = space_distance(tape, enc_ps, enc_ns, w)
            return loss_p(tape, d1, d2, d3, cfg)
        d4 = space_distance(tape, batch, enc_ps, w)
        d5 = space_distance(tape, batch, enc_ns, w)
        d3 = space_distance(tape, enc_ps, enc_ns, w)
        return loss_n(tape, d5, d4, d3, cfg)

    return f, params.parameters()


def run_suite(seed: int = 0, op_trials: int = 10, composite_trials: int = 6
              ) -> GradcheckReport:
    """Run every check; returns per-check worst errors and the trial count."""
    worst: dict[str, float] = {}
    trials = 0
    for name, case in _OP_CASES.items():
        rng = np.random.default_rng(derive_seed(seed, f"op-{name}"))
        err = 0.0
        for _ in range(op_trials):
            f, params = case(rng)
            err = max(err, _check(f, params))
            trials += 1
        worst[name] = err
    for which in ("loss_p", "loss_n"):
        rng = np.random.default_rng(derive_seed(seed, f"composite-{which}"))
        err = 0.0
        for _ in range(composite_trials):
            f, params = _composite_case(rng, which)
            err = max(err, _check(f, params))
            trials += 1
        worst[f"composite_{which}"] = err
    return GradcheckReport(worst_by_check=worst, trials=trials)
