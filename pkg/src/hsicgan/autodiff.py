"""Dense float64 tensors with reverse-mode automatic differentiation.

Every differentiable quantity in this package (network activations, the
adversarial losses, the kernel dependence penalty) is assembled from the
primitives below. Graphs are recorded implicitly: each interior Tensor keeps
references to its parent tensors plus a vector-Jacobian rule, so the graph is
topologically ordered by construction and `backward` replays it in reverse.

Gradient semantics: `backward` computes one fresh gradient per call;
`backward_into` then *adds* those gradients into ``Parameter.grad``, so two
backward passes without zeroing double the stored gradient. Optimisers zero
the grads they consumed.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not satisfy an op's contract."""


class Tensor:
    """A float64 array plus the recording needed to differentiate through it.

    Leaf tensors (inputs, constants, parameter values) carry no vjp. Interior
    nodes are created by the op functions in this module; `parents` always
    point at previously constructed tensors.
    """

    __slots__ = ("data", "parents", "vjp")

    def __init__(self, data, parents: tuple = (), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = tuple(parents)
        self.vjp = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data)

    def detach(self) -> "Tensor":
        """A leaf tensor with the same values, cut off from this graph."""
        return Tensor(self.data)

    def __repr__(self) -> str:
        kind = "leaf" if self.vjp is None else "node"
        return f"Tensor(shape={self.shape}, {kind})"

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __neg__(self) -> "Tensor":
        return negate(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# primitive ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs (m,k)x(k,n), got {a.shape} x {b.shape}")
    ad, bd = a.data, b.data

    def vjp(g):
        return g @ bd.T, ad.T @ g

    return Tensor(ad @ bd, (a, b), vjp)


def _is_bias_broadcast(a: Tensor, b: Tensor) -> bool:
    return a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]


def _check_combine(op: str, a: Tensor, b: Tensor) -> bool:
    """True if the bias-broadcast rule applies; raises on illegal pairings."""
    if a.shape == b.shape:
        return False
    if _is_bias_broadcast(a, b):
        return True
    raise ShapeError(f"{op} needs equal shapes or (m,n)+(n,) bias, got {a.shape}, {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    broadcast = _check_combine("add", a, b)

    def vjp(g):
        return g, g.sum(axis=0) if broadcast else g

    return Tensor(a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    broadcast = _check_combine("sub", a, b)

    def vjp(g):
        return g, -g.sum(axis=0) if broadcast else -g

    return Tensor(a.data - b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    broadcast = _check_combine("mul", a, b)
    ad, bd = a.data, b.data

    def vjp(g):
        ga = g * bd
        gb = (g * ad).sum(axis=0) if broadcast else g * ad
        return ga, gb

    return Tensor(ad * bd, (a, b), vjp)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("log requires strictly positive entries")
    ad = a.data
    return Tensor(np.log(ad), (a,), lambda g: (g / ad,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return Tensor(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    # exp only ever sees non-positive arguments, so it cannot overflow
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid_np(a.data)
    return Tensor(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a: Tensor) -> Tensor:
    """log(1 + exp(x)) in the overflow-free form log1p(exp(-|x|)) + max(x, 0)."""
    ad = a.data
    out = np.log1p(np.exp(-np.abs(ad))) + np.maximum(ad, 0.0)
    return Tensor(out, (a,), lambda g: (g * _sigmoid_np(ad),))


def leaky_relu(a: Tensor, alpha: float = 0.2) -> Tensor:
    ad = a.data
    slope = np.where(ad > 0.0, 1.0, alpha)
    return Tensor(ad * slope, (a,), lambda g: (g * slope,))


def square(a: Tensor) -> Tensor:
    ad = a.data
    return Tensor(ad * ad, (a,), lambda g: (g * (2.0 * ad),))


def negate(a: Tensor) -> Tensor:
    return Tensor(-a.data, (a,), lambda g: (-g,))


def scale(a: Tensor, k: float) -> Tensor:
    k = float(k)
    return Tensor(a.data * k, (a,), lambda g: (g * k,))


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return Tensor(a.data.sum(), (a,), lambda g: (np.full(shape, g),))


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    shape = a.shape
    return Tensor(a.data.mean(), (a,), lambda g: (np.full(shape, g / n),))


def softmax_cross_entropy(logits: Tensor, onehot: Tensor) -> Tensor:
    """Mean over rows of -log softmax(logits)[target], max-subtracted for stability."""
    if logits.ndim != 2 or logits.shape != onehot.shape:
        raise ShapeError(f"cross entropy needs matching (m,K), got {logits.shape}, {onehot.shape}")
    oh = onehot.data
    ok = np.all(np.sum(oh, axis=1) == 1.0) and np.all((oh == 0.0) | (oh == 1.0))
    if not ok or np.any(np.count_nonzero(oh, axis=1) != 1):
        raise ValueError("onehot rows must contain a single 1 and zeros elsewhere")
    m = logits.shape[0]
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -(oh * logp).sum() / m
    softmax = np.exp(logp)

    def vjp(g):
        return ((softmax - oh) * (g / m),)

    # onehot is a constant target; only logits get a gradient
    return Tensor(loss, (logits,), vjp)


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat of zero tensors")
    m = tensors[0].shape[0]
    for t in tensors:
        if t.ndim != 2 or t.shape[0] != m:
            raise ShapeError(f"concat needs matching leading dims, got {[t.shape for t in tensors]}")
    widths = [t.shape[1] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(widths)))

    return Tensor(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), vjp)


# ---------------------------------------------------------------------------
# reverse sweep

def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar with respect to every reachable tensor.

    One reverse topological sweep; each node's gradient is finalised before
    its vjp fires, so every tensor is populated exactly once per call. The
    returned map is fresh per call and never mutated afterwards.
    """
    if loss.data.shape != ():
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    order: list[Tensor] = []
    seen = {loss}
    stack: list[tuple[Tensor, int]] = [(loss, 0)]
    while stack:
        node, i = stack.pop()
        if i < len(node.parents):
            stack.append((node, i + 1))
            parent = node.parents[i]
            if parent not in seen:
                seen.add(parent)
                stack.append((parent, 0))
        else:
            order.append(node)

    grads: dict[Tensor, np.ndarray] = {loss: np.ones((), dtype=np.float64)}
    for node in reversed(order):
        g = grads.get(node)
        if g is None or node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            acc = grads.get(parent)
            # never in-place: vjp outputs may alias upstream buffers
            grads[parent] = pg if acc is None else acc + pg
    return grads


# ---------------------------------------------------------------------------
# parameters and optimiser

class Parameter:
    """A named leaf tensor with an accumulating gradient buffer."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: Tensor):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value.data)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def backward_into(loss: Tensor, params: Iterable[Parameter]) -> None:
    """Run one reverse sweep and add the resulting gradients into each param."""
    grads = backward(loss)
    for p in params:
        pg = grads.get(p.value)
        if pg is not None:
            p.grad += pg


class Adam:
    """Adam with bias correction; step() zeroes the gradients it consumed."""

    def __init__(self, params: Sequence[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.params = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.value.data) for p in self.params]
        self.v = [np.zeros_like(p.value.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * (g * g)
            m_hat = self.m[i] / c1
            v_hat = self.v[i] / c2
            p.value.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.zero_grad()


# ---------------------------------------------------------------------------
# finite-difference oracle

def grad_check(f: Callable[[], Tensor], params: Sequence[Parameter], h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    `f` rebuilds its graph from the current parameter values on every call.
    Error per coordinate is |a-b| / max(1e-12, |a|+|b|).
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    analytic = backward(f())
    worst = 0.0
    for p in params:
        a = analytic.get(p.value)
        if a is None:
            a = np.zeros_like(p.value.data)
        flat = p.value.data.ravel()
        aflat = np.asarray(a, dtype=np.float64).ravel()
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            fp = f().item()
            flat[i] = saved - h
            fm = f().item()
            flat[i] = saved
            num = (fp - fm) / (2.0 * h)
            err = abs(aflat[i] - num) / max(1e-12, abs(aflat[i]) + abs(num))
            worst = max(worst, err)
    return worst
