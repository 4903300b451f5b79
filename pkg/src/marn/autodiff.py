"""Dense tensors with reverse-mode automatic differentiation.

Every kernel the coding model needs lives here: elementwise arithmetic,
matmul, concat/stack, activations, embedding lookup, axis sums, 1-d
convolution and its transpose, masked batch normalization, masked softmax
and seeded dropout.  Ops build a computation graph; ``Tensor.backward``
runs a reverse topological sweep and accumulates gradients additively on
fan-out.

Tensors are treated as immutable once created, except for the ``grad``
slot (and the in-place parameter updates the trainer applies *between*
graph constructions).  A ``grad`` of ``None`` means zero.
"""

from __future__ import annotations

import functools
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    EmptySequenceError,
    IdLookupError,
    NumericError,
    ShapeError,
    StatisticsError,
)

_OP_REGISTRY: dict = {}
_ACTIVE_RECORD = None


def _recordable(fn):
    """Register an op for record/replay and log calls to the active record."""
    _OP_REGISTRY[fn.__name__] = fn

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        out = fn(*args, **kwargs)
        if _ACTIVE_RECORD is not None:
            _ACTIVE_RECORD._append(fn.__name__, args, kwargs, out)
        return out

    return wrapper


class Tensor:
    """A dense real array with an optional gradient slot.

    ``data`` is a numpy array (row-major); ``shape`` therefore always
    satisfies ``product(shape) == data.size``.  Non-leaf tensors keep
    references to their parents and a backward closure.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False, dtype=None, _parents=(), _backward=None, _op="leaf"):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(()))

    def to_numpy(self):
        return self.data

    def detach(self):
        """A constant view of this tensor's values, cut out of the graph."""
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # -- autograd ------------------------------------------------------

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Reverse sweep from this scalar; fills ``grad`` on every
        requires-grad tensor reachable in the graph."""
        if self.size != 1:
            raise ShapeError(f"backward: loss must be scalar, got shape {self.shape}")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- operator sugar ------------------------------------------------

    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _as_tensor(other, self.dtype))

    def __rtruediv__(self, other):
        return div(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return take(self, idx)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def clamp(self, lo, hi):
        return clamp(self, lo, hi)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        n = self.size if axis is None else self.shape[axis]
        return tensor_sum(self, axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)


def _as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _from_op(data, parents, op, make_backward):
    """Build an op output; the backward closure is only created when some
    parent participates in the gradient."""
    rg = any(p.requires_grad for p in parents)
    if rg:
        return Tensor(data, requires_grad=True, _parents=tuple(parents),
                      _backward=make_backward(), _op=op)
    return Tensor(data, _op=op)


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g, shape):
    """Sum ``g`` back down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# -- elementwise and linear kernels -------------------------------------


def _broadcast_data(name, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not conform") from None


@_recordable
def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_data("add", a, b)
    out_data = a.data + b.data

    def make():
        def bw(g):
            _accum(a, _unbroadcast(g, a.shape))
            _accum(b, _unbroadcast(g, b.shape))
        return bw

    return _from_op(out_data, (a, b), "add", make)


@_recordable
def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_data("sub", a, b)
    out_data = a.data - b.data

    def make():
        def bw(g):
            _accum(a, _unbroadcast(g, a.shape))
            _accum(b, _unbroadcast(-g, b.shape))
        return bw

    return _from_op(out_data, (a, b), "sub", make)


@_recordable
def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_data("mul", a, b)
    out_data = a.data * b.data

    def make():
        def bw(g):
            _accum(a, _unbroadcast(g * b.data, a.shape))
            _accum(b, _unbroadcast(g * a.data, b.shape))
        return bw

    return _from_op(out_data, (a, b), "mul", make)


@_recordable
def div(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_data("div", a, b)
    out_data = a.data / b.data

    def make():
        def bw(g):
            _accum(a, _unbroadcast(g / b.data, a.shape))
            _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape))
        return bw

    return _from_op(out_data, (a, b), "div", make)


@_recordable
def neg(a):
    def make():
        def bw(g):
            _accum(a, -g)
        return bw

    return _from_op(-a.data, (a,), "neg", make)


@_recordable
def matmul(a, b):
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    out_data = a.data @ b.data

    def make():
        def bw(g):
            _accum(a, _unbroadcast(g @ b.data.swapaxes(-1, -2), a.shape))
            _accum(b, _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.shape))
        return bw

    return _from_op(out_data, (a, b), "matmul", make)


@_recordable
def power(a, p):
    p = float(p)
    out_data = a.data ** p

    def make():
        def bw(g):
            _accum(a, g * p * a.data ** (p - 1.0))
        return bw

    return _from_op(out_data, (a,), "power", make)


@_recordable
def exp(a):
    out_data = np.exp(a.data)

    def make():
        def bw(g):
            _accum(a, g * out_data)
        return bw

    return _from_op(out_data, (a,), "exp", make)


@_recordable
def log(a):
    out_data = np.log(a.data)

    def make():
        def bw(g):
            _accum(a, g / a.data)
        return bw

    return _from_op(out_data, (a,), "log", make)


@_recordable
def tanh(a):
    out_data = np.tanh(a.data)

    def make():
        def bw(g):
            _accum(a, g * (1.0 - out_data * out_data))
        return bw

    return _from_op(out_data, (a,), "tanh", make)


def _sigmoid_values(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@_recordable
def sigmoid(a):
    out_data = _sigmoid_values(a.data)

    def make():
        def bw(g):
            _accum(a, g * out_data * (1.0 - out_data))
        return bw

    return _from_op(out_data, (a,), "sigmoid", make)


@_recordable
def clamp(a, lo, hi):
    out_data = np.clip(a.data, lo, hi)

    def make():
        mask = (a.data >= lo) & (a.data <= hi)

        def bw(g):
            _accum(a, g * mask)
        return bw

    return _from_op(out_data, (a,), "clamp", make)


@_recordable
def tensor_sum(a, axis=None, keepdims=False):
    """Sum-pool over an axis (or everything when ``axis`` is None)."""
    if axis is not None:
        ax = axis if isinstance(axis, tuple) else (axis,)
        for x in ax:
            if not -a.ndim <= x < a.ndim:
                raise ShapeError(f"sum: axis {axis} invalid for shape {a.shape}")
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def make():
        def bw(g):
            if axis is None:
                _accum(a, np.broadcast_to(g.reshape((1,) * a.ndim), a.shape).copy())
            else:
                ge = g if keepdims else np.expand_dims(g, axis)
                _accum(a, np.broadcast_to(ge, a.shape).copy())
        return bw

    return _from_op(out_data, (a,), "sum", make)


@_recordable
def reshape(a, shape):
    out_data = a.data.reshape(shape)

    def make():
        def bw(g):
            _accum(a, g.reshape(a.shape))
        return bw

    return _from_op(out_data, (a,), "reshape", make)


@_recordable
def transpose(a, axes=None):
    out_data = np.transpose(a.data, axes)

    def make():
        inv = None if axes is None else np.argsort(axes)

        def bw(g):
            _accum(a, np.transpose(g, inv))
        return bw

    return _from_op(out_data, (a,), "transpose", make)


@_recordable
def take(a, idx):
    """Basic/advanced indexing with scatter-add backward."""
    out_data = a.data[idx]

    def make():
        def bw(g):
            buf = np.zeros_like(a.data)
            np.add.at(buf, idx, g)
            _accum(a, buf)
        return bw

    return _from_op(out_data, (a,), "take", make)


@_recordable
def concat(tensors, axis=0):
    tensors = list(tensors)
    base = list(tensors[0].shape)
    for t in tensors[1:]:
        other = list(t.shape)
        if len(other) != len(base) or any(
            i != axis % len(base) and other[i] != base[i] for i in range(len(base))
        ):
            raise ShapeError(
                f"concat: shapes {tensors[0].shape} and {t.shape} differ off axis {axis}")
    out_data = np.concatenate([t.data for t in tensors], axis=axis)

    def make():
        sizes = [t.shape[axis] for t in tensors]
        offsets = np.cumsum(sizes)[:-1]

        def bw(g):
            for t, piece in zip(tensors, np.split(g, offsets, axis=axis)):
                _accum(t, piece)
        return bw

    return _from_op(out_data, tuple(tensors), "concat", make)


@_recordable
def stack(tensors, axis=0):
    tensors = list(tensors)
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def make():
        def bw(g):
            for i, t in enumerate(tensors):
                _accum(t, np.take(g, i, axis=axis))
        return bw

    return _from_op(out_data, tuple(tensors), "stack", make)


@_recordable
def embedding_lookup(table, ids):
    """Rows of ``table`` selected by an integer id array.

    Output shape is ``ids.shape + (embedding_dim,)``.
    """
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        bad = ids[(ids < 0) | (ids >= table.shape[0])].flat[0]
        raise IdLookupError(f"embedding_lookup: id {bad} outside table of {table.shape[0]} rows")
    out_data = table.data[ids]

    def make():
        def bw(g):
            buf = np.zeros_like(table.data)
            np.add.at(buf, ids, g)
            _accum(table, buf)
        return bw

    return _from_op(out_data, (table,), "embedding_lookup", make)


# -- convolution kernels -------------------------------------------------


def _as_batched(x):
    if x.ndim == 2:
        return reshape(x, (1,) + x.shape), True
    if x.ndim == 3:
        return x, False
    raise ShapeError(f"conv kernels expect 2-d or 3-d input, got shape {x.shape}")


@_recordable
def conv1d(x, kernel, bias):
    """Width-3, stride-1 convolution over the sequence axis, zero padding 1.

    ``x``: (n, c_in) or (batch, n, c_in); ``kernel``: (c_out, c_in, 3);
    ``bias``: (c_out,).  Output length equals input length.
    """
    xb, squeeze = _as_batched(x)
    if kernel.ndim != 3 or kernel.shape[2] != 3:
        raise ShapeError(f"conv1d: kernel must be (c_out, c_in, 3), got {kernel.shape}")
    if kernel.shape[1] != xb.shape[2]:
        raise ShapeError(
            f"conv1d: input channels {xb.shape[2]} do not match kernel {kernel.shape}")
    batch, n, c_in = xb.shape
    c_out = kernel.shape[0]
    xpad = np.zeros((batch, n + 2, c_in), dtype=xb.dtype)
    xpad[:, 1:n + 1, :] = xb.data
    out_data = np.empty((batch, n, c_out), dtype=xb.dtype)
    out_data[:] = bias.data
    for k in range(3):
        out_data += xpad[:, k:k + n, :] @ kernel.data[:, :, k].T

    def make():
        def bw(g):
            _accum(bias, g.sum(axis=(0, 1)))
            gk = np.empty_like(kernel.data)
            gpad = np.zeros_like(xpad)
            for k in range(3):
                gk[:, :, k] = np.einsum("bno,bni->oi", g, xpad[:, k:k + n, :])
                gpad[:, k:k + n, :] += g @ kernel.data[:, :, k]
            _accum(kernel, gk)
            _accum(xb, gpad[:, 1:n + 1, :])
        return bw

    out = _from_op(out_data, (xb, kernel, bias), "conv1d", make)
    return reshape(out, out.shape[1:]) if squeeze else out


@_recordable
def transposed_conv1d(x, kernel, bias):
    """Exact adjoint of :func:`conv1d`'s linear map, plus a bias.

    ``x``: (n, c_in) or (batch, n, c_in); ``kernel``: (c_in, c_out, 3);
    ``bias``: (c_out,).  With zero biases and a shared kernel array,
    ``<conv1d(u, K), v> == <u, transposed_conv1d(v, K)>``.
    """
    xb, squeeze = _as_batched(x)
    if kernel.ndim != 3 or kernel.shape[2] != 3:
        raise ShapeError(f"transposed_conv1d: kernel must be (c_in, c_out, 3), got {kernel.shape}")
    if kernel.shape[0] != xb.shape[2]:
        raise ShapeError(
            f"transposed_conv1d: input channels {xb.shape[2]} do not match kernel {kernel.shape}")
    batch, n, c_in = xb.shape
    c_out = kernel.shape[1]
    xpad = np.zeros((batch, n + 2, c_in), dtype=xb.dtype)
    xpad[:, 1:n + 1, :] = xb.data
    out_data = np.empty((batch, n, c_out), dtype=xb.dtype)
    out_data[:] = bias.data
    # out[t] += x[t - k] @ kernel[:, :, k + 1]  <=>  slice xpad at offset 2 - j
    for j in range(3):
        out_data += xpad[:, 2 - j:2 - j + n, :] @ kernel.data[:, :, j]

    def make():
        def bw(g):
            _accum(bias, g.sum(axis=(0, 1)))
            gk = np.empty_like(kernel.data)
            gpad = np.zeros_like(xpad)
            for j in range(3):
                gk[:, :, j] = np.einsum("bni,bno->io", xpad[:, 2 - j:2 - j + n, :], g)
                gpad[:, 2 - j:2 - j + n, :] += g @ kernel.data[:, :, j].T
            _accum(kernel, gk)
            _accum(xb, gpad[:, 1:n + 1, :])
        return bw

    out = _from_op(out_data, (xb, kernel, bias), "transposed_conv1d", make)
    return reshape(out, out.shape[1:]) if squeeze else out


# -- normalization, softmax, dropout -------------------------------------


class NormState:
    """Learnable scale/shift plus running statistics for one norm layer.

    Running stats start at mean 0, var 1; they move with momentum only in
    training mode (unbiased variance for the running update).
    """

    def __init__(self, channels, momentum=0.1, eps=1e-5, dtype=np.float32):
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum = momentum
        self.eps = eps

    @property
    def channels(self):
        return self.gamma.shape[0]


def batch_norm1d(x, state, training, mask=None):
    """Per-channel normalization of (batch, n, c) features.

    Statistics are taken over batch entries and real sequence positions
    only; ``mask`` (batch, n) marks real tokens, None meaning all real.
    Padded rows are still normalized with the computed statistics.
    """
    if x.ndim != 3:
        raise ShapeError(f"batch_norm1d: expected (batch, n, c), got shape {x.shape}")
    batch, n, c = x.shape
    if c != state.channels:
        raise ShapeError(f"batch_norm1d: {c} channels vs norm state of {state.channels}")
    if training:
        if mask is None:
            cnt = float(batch * n)
            xm = x
        else:
            maskf = Tensor(np.asarray(mask, dtype=x.dtype).reshape(batch, n, 1))
            cnt = float(np.asarray(mask).sum())
            xm = mul(x, maskf)
        if cnt < 2:
            raise StatisticsError(
                f"batch_norm1d: {int(cnt)} contributing samples, need at least 2")
        mean = tensor_sum(tensor_sum(xm, axis=0), axis=0) * (1.0 / cnt)
        diff = sub(x, mean)
        dm = diff if mask is None else mul(diff, maskf)
        var = tensor_sum(tensor_sum(mul(dm, dm), axis=0), axis=0) * (1.0 / cnt)
        inv = power(var + state.eps, -0.5)
        out = add(mul(mul(diff, inv), state.gamma), state.beta)
        m = state.momentum
        state.running_mean = ((1 - m) * state.running_mean
                              + m * mean.data.astype(state.running_mean.dtype))
        unbiased = var.data * cnt / max(cnt - 1.0, 1.0)
        state.running_var = ((1 - m) * state.running_var
                             + m * unbiased.astype(state.running_var.dtype))
        return out
    rm = Tensor(state.running_mean.astype(x.dtype))
    inv = Tensor(1.0 / np.sqrt(state.running_var.astype(x.dtype) + state.eps))
    return add(mul(mul(sub(x, rm), inv), state.gamma), state.beta)


@_recordable
def masked_softmax(logits, mask=None):
    """Softmax over the position axis, independently per trailing column.

    ``logits``: (n, d) or (batch, n, d); ``mask``: boolean (n,) or
    (batch, n), None meaning all positions are real.  Masked positions get
    exactly zero weight; each column sums to one.
    """
    if logits.ndim not in (2, 3):
        raise ShapeError(f"masked_softmax: expected (n, d) or (batch, n, d), got {logits.shape}")
    axis = logits.ndim - 2
    if mask is None:
        keep = np.ones(logits.shape[:-1], dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != logits.shape[:-1]:
            raise ShapeError(
                f"masked_softmax: mask shape {keep.shape} vs logits {logits.shape}")
    if not keep.any(axis=axis).all():
        raise EmptySequenceError("masked_softmax: a sequence has every position masked")
    keep3 = keep[..., None]
    z = np.where(keep3, logits.data, -np.inf)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z, where=keep3, out=np.zeros_like(logits.data))
    out_data = e / e.sum(axis=axis, keepdims=True)

    def make():
        def bw(g):
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            _accum(logits, out_data * (g - inner))
        return bw

    return _from_op(out_data, (logits,), "masked_softmax", make)


@_recordable
def dropout(x, rate, training, seed=0):
    """Seeded inverted dropout; the identity (bit-exact) in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training:
        return x
    rng = np.random.default_rng(seed)
    scale = np.asarray(1.0 / (1.0 - rate), dtype=x.dtype)
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) * scale
    out_data = x.data * keep

    def make():
        def bw(g):
            _accum(x, g * keep)
        return bw

    return _from_op(out_data, (x,), "dropout", make)


# -- computation record ---------------------------------------------------


@dataclass
class OpRecord:
    op: str
    args: tuple
    kwargs: dict
    out: Tensor


@dataclass
class ComputationRecord:
    """Ordered log of executed ops; replayable bit-identically.

    Stochastic ops carry their seeds in ``kwargs``, so a replay with the
    same ``rng_seed`` convention reproduces every output exactly.
    """

    rng_seed: int = 0
    entries: list = field(default_factory=list)

    def _append(self, op, args, kwargs, out):
        self.entries.append(OpRecord(op, args, dict(kwargs), out))

    def outputs(self):
        return [e.out for e in self.entries]

    def replay(self):
        """Re-execute every recorded op, feeding replayed intermediates
        forward; returns the new outputs in record order."""
        global _ACTIVE_RECORD
        mapping = {}

        def subst(v):
            if isinstance(v, Tensor):
                return mapping.get(id(v), v)
            if isinstance(v, (list, tuple)):
                return type(v)(subst(u) for u in v)
            return v

        prev, _ACTIVE_RECORD = _ACTIVE_RECORD, None
        try:
            outs = []
            for e in self.entries:
                args = tuple(subst(a) for a in e.args)
                kwargs = {k: subst(v) for k, v in e.kwargs.items()}
                new = _OP_REGISTRY[e.op](*args, **kwargs)
                mapping[id(e.out)] = new
                outs.append(new)
            return outs
        finally:
            _ACTIVE_RECORD = prev


@contextmanager
def record_operations(rng_seed=0):
    """Capture every op executed in the block into a ComputationRecord."""
    global _ACTIVE_RECORD
    record = ComputationRecord(rng_seed=rng_seed)
    prev, _ACTIVE_RECORD = _ACTIVE_RECORD, record
    try:
        yield record
    finally:
        _ACTIVE_RECORD = prev


# -- gradient checking -----------------------------------------------------


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    tol: float
    eps: float
    worst: tuple = ()

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"gradcheck {status}: max rel error {self.max_rel_error:.3e} (tol {self.tol:g})"


def check_gradients(f, wrt, eps=1e-5, tol=1e-4, floor=1e-3):
    """Compare analytic gradients of ``f()`` against central differences.

    ``f`` must be a deterministic zero-argument callable returning a scalar
    Tensor computed from the leaf tensors in ``wrt`` (run stochastic ops in
    eval mode or with fixed seeds, and use 64-bit leaves).  The relative
    error of each coordinate is ``|a - n| / max(|a|, |n|, floor)``; the
    check passes iff the max over coordinates is <= ``tol``.
    """
    params = [wrt] if isinstance(wrt, Tensor) else list(wrt)
    for p in params:
        p.zero_grad()
    y = f()
    if not np.isfinite(y.data).all():
        raise NumericError("check_gradients: function value is not finite")
    y.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    max_rel = 0.0
    worst = ()
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        for ci in range(flat.size):
            orig = flat[ci]
            flat[ci] = orig + eps
            y_hi = f().item()
            flat[ci] = orig - eps
            y_lo = f().item()
            flat[ci] = orig
            num = (y_hi - y_lo) / (2.0 * eps)
            if not np.isfinite(num):
                raise NumericError(
                    f"check_gradients: non-finite difference at param {pi} coordinate {ci}")
            ana = analytic[pi].reshape(-1)[ci]
            rel = abs(ana - num) / max(abs(ana), abs(num), floor)
            if rel > max_rel:
                max_rel = rel
                worst = (pi, ci, float(ana), float(num))
    return GradCheckReport(max_rel_error=max_rel, passed=max_rel <= tol, tol=tol,
                           eps=eps, worst=worst)
