"""Dense 2-D tensors with reverse-mode automatic differentiation.

All trainable arithmetic in the package flows through the ops in this
module. Ops take an explicit ``Tape`` as their first argument; passing
``tape=None`` runs forward-only, which is how scoring paths skip gradient
bookkeeping. A recorded op only lands on the tape when its output actually
requires gradients, so constants are free.

Everything is float64. Values are checked for NaN/Inf at op boundaries
(tensor construction), so a diverging computation fails fast instead of
propagating garbage.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError

if TYPE_CHECKING:
    from .graphs import Graph


class Tensor:
    """A rows x cols matrix of float64 plus an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"tensors are non-empty 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor contains NaN or Inf")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def __float__(self) -> float:
        return self.item()

    def __repr__(self) -> str:
        return f"Tensor({self.rows}x{self.cols}, requires_grad={self.requires_grad})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # copy on first write: g may alias a downstream grad buffer
    if t.grad is None:
        t.grad = np.array(g)
    else:
        t.grad += g


class Tape:
    """Ordered record of executed ops, replayed in reverse by backward()."""

    __slots__ = ("_records", "_consumed")

    def __init__(self):
        self._records: list[Callable[[], None]] = []
        self._consumed = False

    def __len__(self) -> int:
        return len(self._records)

    def _record(self, backward_fn: Callable[[], None]) -> None:
        self._records.append(backward_fn)

    def backward(self, output: Tensor) -> None:
        """Seed d(output)=1 and accumulate gradients into every input.

        The tape is single-use: running backward twice without a fresh
        forward pass would differentiate stale state, so it is rejected.
        """
        if self._consumed:
            raise RuntimeError("tape already consumed; rebuild the forward pass")
        if output.data.shape != (1, 1):
            raise DimensionError("backward() starts from a 1x1 scalar output")
        if not output.requires_grad:
            raise RuntimeError("output does not depend on any trainable tensor")
        self._consumed = True
        output.grad = np.ones((1, 1))
        for fn in reversed(self._records):
            fn()


def _maybe_record(tape: Tape | None, out: Tensor, backward_fn) -> None:
    if tape is not None and out.requires_grad:
        tape._record(backward_fn)


def matmul(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; dA = g.B^T, dB = A^T.g."""
    if a.cols != b.rows:
        raise DimensionError(f"matmul {a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    out = Tensor(a.data @ b.data, requires_grad=a.requires_grad or b.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    _maybe_record(tape, out, backward)
    return out


def add(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"add {a.data.shape} + {b.data.shape}")
    out = Tensor(a.data + b.data, requires_grad=a.requires_grad or b.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, g)

    _maybe_record(tape, out, backward)
    return out


def sub(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"sub {a.data.shape} - {b.data.shape}")
    out = Tensor(a.data - b.data, requires_grad=a.requires_grad or b.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, -g)

    _maybe_record(tape, out, backward)
    return out


def mul(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"mul {a.data.shape} * {b.data.shape}")
    out = Tensor(a.data * b.data, requires_grad=a.requires_grad or b.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        if a.requires_grad:
            _accumulate(a, g * b.data)
        if b.requires_grad:
            _accumulate(b, g * a.data)

    _maybe_record(tape, out, backward)
    return out


def scale(tape: Tape | None, a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c, requires_grad=a.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(a, g * c)

    _maybe_record(tape, out, backward)
    return out


def add_row_bias(tape: Tape | None, h: Tensor, bias: Tensor) -> Tensor:
    """Add a 1 x d bias to every row; d(bias) sums the gradient over rows."""
    if bias.rows != 1 or bias.cols != h.cols:
        raise DimensionError(f"bias {bias.data.shape} against rows of {h.data.shape}")
    out = Tensor(h.data + bias.data, requires_grad=h.requires_grad or bias.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        if h.requires_grad:
            _accumulate(h, g)
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=0, keepdims=True))

    _maybe_record(tape, out, backward)
    return out


def relu(tape: Tape | None, x: Tensor) -> Tensor:
    """Elementwise max(0, x); backward masks by x > 0."""
    out = Tensor(np.maximum(x.data, 0.0), requires_grad=x.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(x, g * (x.data > 0.0))

    _maybe_record(tape, out, backward)
    return out


def row_max_pool(tape: Tape | None, h: Tensor) -> Tensor:
    """Column-wise max over rows, 1 x d output.

    Backward routes each column's gradient to the first row attaining the
    maximum (lowest row index on ties), keeping the pass deterministic.
    """
    argmax = np.argmax(h.data, axis=0)
    out = Tensor(h.data[argmax, np.arange(h.cols)].reshape(1, -1),
                 requires_grad=h.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        gh = np.zeros_like(h.data)
        gh[argmax, np.arange(h.data.shape[1])] = g[0]
        _accumulate(h, gh)

    _maybe_record(tape, out, backward)
    return out


def row_mean_pool(tape: Tape | None, h: Tensor) -> Tensor:
    """Column-wise mean over rows, 1 x d output."""
    n = h.rows
    out = Tensor(h.data.mean(axis=0, keepdims=True), requires_grad=h.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(h, np.repeat(g / n, n, axis=0))

    _maybe_record(tape, out, backward)
    return out


def l2_normalize_rows(tape: Tape | None, h: Tensor, eps: float = 1e-12) -> Tensor:
    """Divide each row by max(||row||, eps).

    Rows with norm >= eps come out unit length; shorter rows are divided by
    eps, which leaves an exact zero row at zero instead of NaN.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    norms = np.linalg.norm(h.data, axis=1, keepdims=True)
    denom = np.maximum(norms, eps)
    out = Tensor(h.data / denom, requires_grad=h.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        clamped = norms < eps
        y = out.data
        # unit-sphere projection where the true norm is used, plain 1/eps
        # scaling where the denominator was clamped
        gh = (g - y * np.sum(y * g, axis=1, keepdims=True)) / denom
        if np.any(clamped):
            gh = np.where(clamped, g / eps, gh)
        _accumulate(h, gh)

    _maybe_record(tape, out, backward)
    return out


def stack_rows(tape: Tape | None, rows: Sequence[Tensor]) -> Tensor:
    """Vertically stack 1 x d tensors into an n x d tensor."""
    if not rows:
        raise DimensionError("stack_rows needs at least one row")
    d = rows[0].cols
    for r in rows:
        if r.rows != 1 or r.cols != d:
            raise DimensionError("stack_rows inputs must all be 1 x d")
    out = Tensor(np.vstack([r.data for r in rows]),
                 requires_grad=any(r.requires_grad for r in rows))

    def backward():
        g = out.grad
        if g is None:
            return
        for i, r in enumerate(rows):
            if r.requires_grad:
                _accumulate(r, g[i:i + 1, :])

    _maybe_record(tape, out, backward)
    return out


def _pairwise_mean(a: np.ndarray, b: np.ndarray):
    """Mean Euclidean distance over all cross pairs, plus the pieces the
    backward pass needs."""
    diff = a[:, None, :] - b[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return float(dist.mean()), diff, dist


def pairwise_mean_value(a: np.ndarray, b: np.ndarray) -> float:
    """Forward-only mean cross-pair distance on raw row matrices."""
    return _pairwise_mean(np.atleast_2d(a), np.atleast_2d(b))[0]


def pairwise_mean_distance(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    """Mean over all (i, j) of ||a_i - b_j||_2, as a 1x1 tensor.

    Coincident pairs contribute zero and receive zero gradient (the
    subgradient at the kink).
    """
    if a.cols != b.cols:
        raise DimensionError(f"pairwise distance between {a.cols}-d and {b.cols}-d rows")
    value, diff, dist = _pairwise_mean(a.data, b.data)
    out = Tensor([[value]], requires_grad=a.requires_grad or b.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        safe = np.where(dist > 0.0, dist, 1.0)
        coef = np.where(dist > 0.0, g[0, 0] / (dist.size * safe), 0.0)
        weighted = diff * coef[:, :, None]
        if a.requires_grad:
            _accumulate(a, weighted.sum(axis=1))
        if b.requires_grad:
            _accumulate(b, -weighted.sum(axis=0))

    _maybe_record(tape, out, backward)
    return out


def sum_all(tape: Tape | None, x: Tensor) -> Tensor:
    out = Tensor([[x.data.sum()]], requires_grad=x.requires_grad)

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(x, np.full_like(x.data, g[0, 0]))

    _maybe_record(tape, out, backward)
    return out


def normalize_adjacency(graph: "Graph") -> Tensor:
    """Symmetrically normalized adjacency with self-loops.

    A_hat = D~^(-1/2) (A + I) D~^(-1/2) where D~ is the degree matrix of
    A + I. Returned as a constant: the propagation structure is not a
    trainable quantity.
    """
    n = graph.num_nodes
    a = np.zeros((n, n))
    for u, v in graph.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    a += np.eye(n)
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return constant(a * inv_sqrt[:, None] * inv_sqrt[None, :])


class SGD:
    """Plain gradient descent; one step subtracts lr * grad in place."""

    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: Iterable[Tensor]) -> None:
        for p in params:
            if p.grad is None:
                continue
            if not np.all(np.isfinite(p.grad)):
                raise NonFiniteError("NaN/Inf gradient in optimizer step")
            p.data -= self.lr * p.grad
            p.grad = None


class Adam:
    """Adam with bias correction; moment state persists across steps."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[int, np.ndarray] = {}
        self._v: dict[int, np.ndarray] = {}

    def step(self, params: Iterable[Tensor]) -> None:
        self.t += 1
        for p in params:
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("NaN/Inf gradient in optimizer step")
            key = id(p)
            m = self._m.get(key)
            v = self._v.get(key)
            if m is None:
                m = np.zeros_like(p.data)
                v = np.zeros_like(p.data)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self._m[key] = m
            self._v[key] = v
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None


def make_optimizer(kind: str, lr: float):
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {kind!r}")


def finite_diff_check(f, params: Sequence[Tensor], h: float = 1e-4) -> float:
    """Worst normwise relative error between tape and central differences.

    ``f(tape)`` must rebuild the scalar objective from scratch, reading the
    tensors in ``params``; it is called once with a fresh tape for the
    analytic gradient and twice per coordinate with ``tape=None`` for the
    numeric one. Per parameter tensor the error is
    ||g_fd - g_tape|| / max(||g_fd||, ||g_tape||, 1e-12); the max over
    tensors is returned, so two all-zero gradients compare as 0.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    tape = Tape()
    out = f(tape)
    tape.backward(out)
    analytic = []
    for p in params:
        analytic.append(np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        p.grad = None

    worst = 0.0
    for p, an in zip(params, analytic):
        fd = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        fd_flat = fd.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f(None).item()
            flat[i] = orig - h
            f_minus = f(None).item()
            flat[i] = orig
            fd_flat[i] = (f_plus - f_minus) / (2.0 * h)
        denom = max(np.linalg.norm(fd), np.linalg.norm(an), 1e-12)
        worst = max(worst, float(np.linalg.norm(fd - an) / denom))
    return worst
