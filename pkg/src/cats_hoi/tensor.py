"""Dense tensors with reverse-mode differentiation on top of numpy.

Every operation returns a new :class:`Tensor` that remembers its parents and a
closure mapping the output adjoint to parent adjoints.  :meth:`Tensor.backward`
orders the recorded graph topologically (the tape) and replays the closures in
reverse.  Gradients accumulate into ``.grad``; call :func:`zero_grad` between
optimisation steps.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

DTYPE = np.float64
LEAKY_SLOPE = 0.2


class ShapeError(ValueError):
    pass


class DegenerateSliceError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=DTYPE):
        arr = np.asarray(data, dtype=dtype)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple = ()
        self._backward: Optional[Callable] = None
        self.op = "leaf"

    # -- bookkeeping -------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return index(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    # -- reverse pass ------------------------------------------------------
    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Populate ``.grad`` on every reachable tensor with ``requires_grad``."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")
            grad = np.ones_like(self.data)
        tape = ComputationTape.record(self)
        tape.replay(self, np.asarray(grad, dtype=self.data.dtype))


class ComputationTape:
    """Topologically ordered list of the operations that produced a tensor."""

    def __init__(self, order: list):
        self.order = order

    @classmethod
    def record(cls, root: Tensor) -> "ComputationTape":
        order, seen = [], set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        return cls(order)

    def replay(self, root: Tensor, grad: np.ndarray) -> None:
        adjoints = {id(root): grad}
        for node in reversed(self.order):
            g = adjoints.pop(id(node), None)
            if g is None:
                continue
            if node.grad is None:
                node.grad = g.copy() if node._backward is None else g
            else:
                node.grad = node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                adjoints[key] = pg if key not in adjoints else adjoints[key] + pg


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


def _make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


# -- elementwise arithmetic -------------------------------------------------
def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)), "mul")


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _make(y, (x,), lambda g: (g * y,), "exp")


def log(x: Tensor) -> Tensor:
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


# -- activations -------------------------------------------------------------
def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _make(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    return _make(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    # subgradient at 0 takes the positive branch
    d = np.where(x.data >= 0, 1.0, slope)
    return _make(x.data * d, (x,), lambda g: (g * d,), "leaky_relu")


_ACTIVATIONS = {"tanh": tanh, "sigmoid": sigmoid, "leaky_relu": leaky_relu}


def activation(x: Tensor, kind: str, **kwargs) -> Tensor:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(_ACTIVATIONS)}") from None
    return fn(x, **kwargs)


# -- linear algebra ------------------------------------------------------------
def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes with aligned (or absent) leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    la, lb = a.shape[:-2], b.shape[:-2]
    if la and lb and la != lb:
        raise ShapeError(f"matmul batch mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


# -- reductions and reshaping --------------------------------------------------
def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / float(n))


def reshape(x: Tensor, shape) -> Tensor:
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),), "reshape")


def swapaxes(x: Tensor, a1: int, a2: int) -> Tensor:
    return _make(np.swapaxes(x.data, a1, a2), (x,),
                 lambda g: (np.swapaxes(g, a1, a2),), "swapaxes")


def index(x: Tensor, idx) -> Tensor:
    def backward(g):
        out = np.zeros_like(x.data)
        np.add.at(out, idx, g)
        return (out,)

    return _make(np.asarray(x.data[idx]), (x,), backward, "index")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    nd = tensors[0].ndim
    ax = axis % nd
    for t in tensors[1:]:
        if t.ndim != nd or t.shape[:ax] + t.shape[ax + 1:] != tensors[0].shape[:ax] + tensors[0].shape[ax + 1:]:
            raise ShapeError(f"concat mismatch along axis {axis}: {[t.shape for t in tensors]}")
    bounds = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def backward(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax)
                     for i in range(len(tensors)))

    return _make(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward, "concat")


def concat_last_axis(a: Tensor, b: Tensor) -> Tensor:
    return concat([a, b], axis=-1)


# -- normalisation and losses ----------------------------------------------------
def softmax_last_axis(x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Max-shifted softmax; masked (False) entries are exactly zero."""
    z = x.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != z.shape:
            mask = np.broadcast_to(mask, z.shape)
        if not mask.any(axis=-1).all():
            raise DegenerateSliceError("softmax slice with every position masked")
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _make(y, (x,), backward, "softmax")


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under ``logits[..., C]``."""
    labels = np.asarray(labels, dtype=np.int64)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    flat = logp.reshape(-1, logp.shape[-1])
    lab = labels.reshape(-1)
    n = lab.size
    loss = -flat[np.arange(n), lab].mean()

    def backward(g):
        p = np.exp(flat)
        p[np.arange(n), lab] -= 1.0
        return ((g / n) * p.reshape(logits.shape),)

    return _make(np.asarray(loss), (logits,), backward, "cross_entropy")


def straight_through(soft: Tensor) -> Tensor:
    """Forward: one-hot argmax of ``soft`` (ties to lower index); backward: identity."""
    hard = np.zeros_like(soft.data)
    np.put_along_axis(hard, soft.data.argmax(axis=-1)[..., None], 1.0, axis=-1)
    return _make(hard, (soft,), lambda g: (g,), "straight_through")


# -- recurrent primitive ---------------------------------------------------------
def gru_sequence(x: Tensor, w_x: Tensor, w_h: Tensor, b_x: Tensor, b_h: Tensor,
                 reverse: bool = False) -> Tensor:
    """Run a GRU over ``x[B, T, D]`` from a zero state; returns states ``[B, T, Dh]``.

    Gate layout along the last weight axis is (update, reset, candidate)::

        z = sig(x Wz + bz + h Uz + cz)
        r = sig(x Wr + br + h Ur + cr)
        n = tanh(x Wn + bn + r * (h Un + cn))
        h' = (1 - z) * n + z * h

    The whole recurrence is one tape entry with hand-written backprop through time.
    """
    X = x.data
    B, T, _ = X.shape
    Dh = w_h.shape[0]
    if w_x.shape != (X.shape[2], 3 * Dh) or w_h.shape != (Dh, 3 * Dh):
        raise ShapeError(f"gru weights {w_x.shape}, {w_h.shape} do not fit input {X.shape}")
    steps = range(T - 1, -1, -1) if reverse else range(T)
    gx = X @ w_x.data + b_x.data  # (B, T, 3Dh)
    Wh = w_h.data
    bh = b_h.data
    hs = np.zeros((B, T, Dh), dtype=X.dtype)
    prev = np.zeros((B, T, Dh), dtype=X.dtype)
    zs = np.empty((B, T, Dh))
    rs = np.empty((B, T, Dh))
    ns = np.empty((B, T, Dh))
    hn = np.empty((B, T, Dh))
    h = np.zeros((B, Dh), dtype=X.dtype)
    for t in steps:
        gh = h @ Wh + bh
        z = _sigmoid(gx[:, t, :Dh] + gh[:, :Dh])
        r = _sigmoid(gx[:, t, Dh:2 * Dh] + gh[:, Dh:2 * Dh])
        n = np.tanh(gx[:, t, 2 * Dh:] + r * gh[:, 2 * Dh:])
        prev[:, t] = h
        zs[:, t], rs[:, t], ns[:, t], hn[:, t] = z, r, n, gh[:, 2 * Dh:]
        h = (1.0 - z) * n + z * h
        hs[:, t] = h

    def backward(G):
        dgx = np.zeros_like(gx)
        dgh = np.zeros((B, T, 3 * Dh))
        dh = np.zeros((B, Dh))
        for t in reversed(list(steps)):
            dh = dh + G[:, t]
            z, r, n, h0 = zs[:, t], rs[:, t], ns[:, t], prev[:, t]
            dn = dh * (1.0 - z) * (1.0 - n * n)
            dz = dh * (h0 - n) * z * (1.0 - z)
            dr = dn * hn[:, t] * r * (1.0 - r)
            dgx[:, t, :Dh] = dz
            dgx[:, t, Dh:2 * Dh] = dr
            dgx[:, t, 2 * Dh:] = dn
            dgh[:, t, :Dh] = dz
            dgh[:, t, Dh:2 * Dh] = dr
            dgh[:, t, 2 * Dh:] = dn * r
            dh = dh * z + dgh[:, t] @ Wh.T
        flat_gx = dgx.reshape(-1, 3 * Dh)
        flat_gh = dgh.reshape(-1, 3 * Dh)
        return (dgx @ w_x.data.T,
                X.reshape(-1, X.shape[2]).T @ flat_gx,
                prev.reshape(-1, Dh).T @ flat_gh,
                flat_gx.sum(axis=0),
                flat_gh.sum(axis=0))

    return _make(hs, (x, w_x, w_h, b_x, b_h), backward, "gru")


# -- verification ----------------------------------------------------------------
def finite_difference_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-5) -> float:
    """Max over coordinates of ``|analytic - central| / max(1, |central|)``.

    ``f`` maps a tensor to a scalar tensor and must be deterministic.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x.requires_grad = True
    x.grad = None
    out = f(x)
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("non-finite value from f at the base point")
    out.backward()
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    base = x.data.copy()
    numeric = np.empty_like(base)
    flat = x.data.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = float(f(x).data)
        flat[i] = orig - step
        fm = float(f(x).data)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite value from f at coordinate {i}")
        numeric.reshape(-1)[i] = (fp - fm) / (2.0 * step)
    x.data[...] = base
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max()) if err.size else 0.0
