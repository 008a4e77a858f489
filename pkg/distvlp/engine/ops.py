"""Differentiable primitives over :class:`~distvlp.engine.tensor.Tensor`.

Each primitive validates its input shapes, computes the forward value with
numpy/scipy, and hands :meth:`Tensor.from_op` a closure returning the
gradient of every input. Broadcasting follows numpy; gradients are summed back
to the original input shapes.
"""

from __future__ import annotations

import builtins
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse, special

from .tensor import ShapeError, Tensor, as_tensor

Axis = Union[None, int, Tuple[int, ...]]

LAYER_NORM_EPS = 1e-5
ROW_NORM_FLOOR = 1e-6
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast(kind: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{kind}: incompatible shapes {a.shape} and {b.shape}") from None


# -- elementwise binary -------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def add_n(tensors: Sequence) -> Tensor:
    """Left fold of ``add``; the sum order is fixed so totals are reproducible."""
    if not tensors:
        raise ShapeError("add_n: nothing to add")
    total = as_tensor(tensors[0])
    for t in tensors[1:]:
        total = add(total, t)
    return total


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("div", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def backward(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * a.data / (b.data ** 2), b.shape)

    return Tensor.from_op(out, (a, b), backward, "div")


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return Tensor.from_op(a.data * factor, (a,), backward, "scale")


# -- elementwise unary --------------------------------------------------------

def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)

    def backward(g):
        return (g * out,)

    return Tensor.from_op(out, (a,), backward, "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return Tensor.from_op(out, (a,), backward, "log")


def square(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        return (2.0 * g * a.data,)

    return Tensor.from_op(a.data * a.data, (a,), backward, "square")


def relu(a) -> Tensor:
    a = as_tensor(a)
    active = a.data > 0

    def backward(g):
        return (g * active,)

    return Tensor.from_op(np.where(active, a.data, 0.0), (a,), backward, "relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = special.expit(a.data)

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor.from_op(out, (a,), backward, "sigmoid")


def gelu(a) -> Tensor:
    """Tanh-approximated GELU."""
    a = as_tensor(a)
    x = a.data
    inner = _SQRT_2_OVER_PI * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        d_inner = _SQRT_2_OVER_PI * (1.0 + 3 * 0.044715 * x ** 2)
        local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner
        return (g * local,)

    return Tensor.from_op(out, (a,), backward, "gelu")


# -- row-wise (last axis) -----------------------------------------------------

def softmax_rows(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim == 0:
        raise ShapeError("softmax_rows: needs at least one axis, got a scalar")
    out = special.softmax(a.data, axis=-1)

    def backward(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return Tensor.from_op(out, (a,), backward, "softmax_rows")


def log_softmax_rows(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim == 0:
        raise ShapeError("log_softmax_rows: needs at least one axis, got a scalar")
    out = special.log_softmax(a.data, axis=-1)

    def backward(g):
        return (g - np.exp(out) * np.sum(g, axis=-1, keepdims=True),)

    return Tensor.from_op(out, (a,), backward, "log_softmax_rows")


def layer_norm(a, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize the last axis to zero mean and unit variance (no affine)."""
    a = as_tensor(a)
    if a.ndim == 0:
        raise ShapeError("layer_norm: needs at least one axis, got a scalar")
    centered = a.data - a.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(np.mean(centered ** 2, axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def backward(g):
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = np.mean(g * xhat, axis=-1, keepdims=True)
        return (inv_std * (g - g_mean - xhat * gx_mean),)

    return Tensor.from_op(xhat, (a,), backward, "layer_norm")


def row_normalize(a, floor: float = ROW_NORM_FLOOR) -> Tensor:
    """Divide each row of non-negative weights by its sum.

    Rows whose sum falls below ``floor`` carry no usable signal and are
    replaced by uniform weights, which receive no gradient.
    """
    a = as_tensor(a)
    if a.ndim == 0:
        raise ShapeError("row_normalize: needs at least one axis, got a scalar")
    totals = a.data.sum(axis=-1, keepdims=True)
    degenerate = totals < floor
    safe = np.where(degenerate, 1.0, totals)
    width = a.shape[-1]
    out = np.where(degenerate, 1.0 / width, a.data / safe)

    def backward(g):
        grad = (g - np.sum(g * out, axis=-1, keepdims=True)) / safe
        return (np.where(degenerate, 0.0, grad),)

    return Tensor.from_op(out, (a,), backward, "row_normalize")


# -- linear algebra and layout ------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands need at least 2 axes, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner extents differ, got {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul: batch axes incompatible, got {a.shape} and {b.shape}") from None

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(a.data @ b.data, (a, b), backward, "matmul")


def transpose(a, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; by default swap the last two."""
    a = as_tensor(a)
    if axes is None:
        if a.ndim < 2:
            raise ShapeError(f"transpose: needs at least 2 axes, got {a.shape}")
        axes = list(range(a.ndim - 2)) + [a.ndim - 1, a.ndim - 2]
    axes = [int(x) % max(a.ndim, 1) for x in axes]
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation of the axes of {a.shape}")
    inverse = np.argsort(axes)

    def backward(g):
        return (np.transpose(g, inverse),)

    return Tensor.from_op(np.transpose(a.data, axes), (a,), backward, "transpose")


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from None

    def backward(g):
        return (g.reshape(a.shape),)

    return Tensor.from_op(out, (a,), backward, "reshape")


def concat_last_axis(tensors: Sequence[Tensor]) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat_last_axis: nothing to concatenate")
    lead = parts[0].shape[:-1]
    for p in parts[1:]:
        if p.shape[:-1] != lead:
            raise ShapeError(f"concat_last_axis: leading axes differ, got {parts[0].shape} and {p.shape}")
    widths = [p.shape[-1] for p in parts]
    bounds = np.cumsum(widths)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=-1))

    return Tensor.from_op(np.concatenate([p.data for p in parts], axis=-1), parts, backward, "concat_last_axis")


def _is_basic(index: tuple) -> bool:
    return all(
        isinstance(part, (slice, type(Ellipsis), type(None))) or (isinstance(part, (int, np.integer)) and not isinstance(part, bool))
        for part in index
    )


def _integer_gather(index: tuple) -> bool:
    return all(isinstance(part, np.ndarray) and np.issubdtype(part.dtype, np.integer) for part in index)


def _scatter_add(shape: Tuple[int, ...], index, g: np.ndarray) -> np.ndarray:
    """Gradient of ``x[index]``: route ``g`` back, summing repeated targets."""
    parts = index if isinstance(index, tuple) else (index,)
    if _is_basic(parts):
        # basic indexing never repeats a target
        grad = np.zeros(shape)
        grad[index] = g
        return grad
    if parts and _integer_gather(parts):
        lead = shape[: len(parts)]
        flat = np.ravel_multi_index(np.broadcast_arrays(*parts), lead, mode="wrap").ravel()
        width = int(np.prod(shape[len(parts):], dtype=np.int64))
        onehot = sparse.csr_matrix(
            (np.ones(flat.size), (flat, np.arange(flat.size))), shape=(int(np.prod(lead, dtype=np.int64)), flat.size)
        )
        return np.asarray(onehot @ g.reshape(flat.size, width)).reshape(shape)
    grad = np.zeros(shape)
    np.add.at(grad, index, g)
    return grad


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data[index]
    except IndexError as exc:
        raise ShapeError(f"getitem: {exc} for shape {a.shape}") from None

    def backward(g):
        return (_scatter_add(a.shape, index, g),)

    return Tensor.from_op(np.array(out, dtype=np.float64), (a,), backward, "getitem")


def split(a, parts: int, axis: int = -1) -> List[Tensor]:
    """Cut ``axis`` into ``parts`` equal contiguous chunks."""
    a = as_tensor(a)
    if a.ndim == 0:
        raise ShapeError("split: cannot split a scalar")
    extent = a.shape[axis]
    if parts <= 0 or extent % parts:
        raise ShapeError(f"split: axis of extent {extent} does not divide into {parts} parts")
    width = extent // parts
    axis = axis % a.ndim
    chunks = []
    for i in range(parts):
        index = [slice(None)] * a.ndim
        index[axis] = slice(i * width, (i + 1) * width)
        chunks.append(getitem(a, tuple(index)))
    return chunks


# -- reductions ---------------------------------------------------------------

def _expand(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        axes = tuple(x % len(shape) for x in axes)
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        return (np.array(_expand(g, a.shape, axis, keepdims)),)

    return Tensor.from_op(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward, "sum")


def mean(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = np.mean(a.data, axis=axis, keepdims=keepdims)
    count = a.data.size // max(np.asarray(out).size, 1)

    def backward(g):
        return (np.array(_expand(g, a.shape, axis, keepdims)) / count,)

    return Tensor.from_op(out, (a,), backward, "mean")


_REGISTRY: Dict[str, Callable[..., Tensor]] = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "exp": exp,
    "log": log,
    "square": square,
    "relu": relu,
    "sigmoid": sigmoid,
    "gelu": gelu,
    "softmax_rows": softmax_rows,
    "log_softmax_rows": log_softmax_rows,
    "layer_norm": layer_norm,
    "row_normalize": row_normalize,
    "concat_last_axis": lambda *xs: concat_last_axis(xs),
    "split": split,
    "transpose": transpose,
    "reshape": reshape,
    "sum": sum,
    "mean": mean,
    "scale": scale,
}


def forward_op(kind: str, *inputs, **kwargs):
    """Dispatch a primitive by name."""
    try:
        fn = _REGISTRY[kind]
    except KeyError:
        raise ShapeError(f"unknown op kind {kind!r}; known: {', '.join(builtins.sorted(_REGISTRY))}") from None
    return fn(*inputs, **kwargs)


def cross_entropy(logits: Tensor, labels: np.ndarray, weights: Optional[np.ndarray] = None) -> Tensor:
    """Weighted negative log-likelihood of integer ``labels`` under row logits.

    Without weights this is the plain mean over rows.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy: logits {logits.shape} do not match labels {labels.shape}")
    logp = log_softmax_rows(logits)
    picked = getitem(logp, (np.arange(labels.shape[0]), labels))
    if weights is None:
        return scale(mean(picked), -1.0)
    return scale(sum(mul(picked, np.asarray(weights, dtype=np.float64))), -1.0)
