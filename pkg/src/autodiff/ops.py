"""Differentiable primitives over 64-bit dense tensors"""

from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from ..errors import ShapeError, SingularMatrixError
from .tape import Tensor, check_finite, tape_of

ArrayLike = Union[Tensor, np.ndarray, float, int]

MAX_CONDITION = 1e12
LAYER_NORM_EPS = 1e-5


def constant(value) -> Tensor:
    """Wrap values as a tensor that is not recorded on any tape"""
    return Tensor(value)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _finish(op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp_factory) -> Tensor:
    # constant chains are checked once at their output by the caller
    tape = tape_of(*inputs)
    if tape is None:
        return Tensor(data)
    check_finite(op, data)
    return tape.record(op, data, inputs, vjp_factory())


# Elementwise


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("add", a, b)
    return _finish("add", a.data + b.data, (a, b), lambda: lambda g: (g, g))


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("sub", a, b)
    return _finish("sub", a.data - b.data, (a, b), lambda: lambda g: (g, -g))


def neg(a: Tensor) -> Tensor:
    return _finish("neg", -a.data, (a,), lambda: lambda g: (-g,))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    return _finish("mul", a.data * b.data, (a, b), lambda: lambda g: (g * b.data, g * a.data))


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("div", a, b)
    out = a.data / b.data

    def factory():
        def vjp(g):
            ga = g / b.data
            return ga, -ga * out

        return vjp

    return _finish("div", out, (a, b), factory)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a Python scalar"""
    c = float(c)
    return _finish("scale", a.data * c, (a,), lambda: lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    # subgradient at 0 is 0
    mask = a.data > 0
    return _finish("relu", np.where(mask, a.data, 0.0), (a,), lambda: lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _finish("exp", out, (a,), lambda: lambda g: (g * out,))


def sqrt(a: Tensor) -> Tensor:
    # gradient at 0 is taken as 0, like the ReLU subgradient
    out = np.sqrt(a.data)

    def factory():
        def vjp(g):
            return (np.divide(g, 2.0 * out, out=np.zeros_like(out), where=out > 0),)

        return vjp

    return _finish("sqrt", out, (a,), factory)


def square(a: Tensor) -> Tensor:
    return _finish("square", a.data * a.data, (a,), lambda: lambda g: (2.0 * g * a.data,))


# Linear algebra


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return _finish(
        "matmul", a.data @ b.data, (a, b), lambda: lambda g: (g @ b.data.T, a.data.T @ g)
    )


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got shape {a.shape}")
    return _finish("transpose", a.data.T, (a,), lambda: lambda g: (g.T,))


def solve(a: ArrayLike, b: ArrayLike) -> Tensor:
    """
    Solve the square system A·X = B with partial-pivot LU

    Args:
        a: Nonsingular n×n matrix
        b: n×k right-hand side

    Returns:
        X with A·X = B

    Raises:
        ShapeError: A is not square or B has the wrong row count
        SingularMatrixError: Condition estimate of A exceeds 1e12
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"solve: A must be square, got {a.shape}")
    if b.ndim != 2 or b.shape[0] != a.shape[0]:
        raise ShapeError(f"solve: B shape {b.shape} does not match A {a.shape}")
    if not np.all(np.isfinite(a.data)):
        raise SingularMatrixError("solve: A has non-finite entries")
    factors = lu_factor(a.data, check_finite=False)
    rcond, _ = dgecon(factors[0], np.linalg.norm(a.data, 1), norm="1")
    # also rejects a NaN estimate
    if not rcond * MAX_CONDITION >= 1.0:
        cond = 1.0 / rcond if rcond > 0 else np.inf
        raise SingularMatrixError(f"solve: condition estimate {cond:.3e} exceeds {MAX_CONDITION:.0e}", cond)
    out = lu_solve(factors, b.data, check_finite=False)

    def factory():
        def vjp(g):
            gb = lu_solve(factors, g, trans=1, check_finite=False)
            return -gb @ out.T, gb

        return vjp

    return _finish("solve", out, (a, b), factory)


# Shape manipulation


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {e}") from e
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _finish("concat", out, tensors, lambda: lambda g: np.split(g, bounds, axis=axis))


def slice_axis(a: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    """Contiguous slice [start, stop) along one axis"""
    if not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}, {stop}) out of range for axis {axis} of {a.shape}")
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape = a.shape

    def factory():
        def vjp(g):
            full = np.zeros(shape)
            full[index] = g
            return (full,)

        return vjp

    return _finish("slice", a.data[index].copy(), (a,), factory)


def split(a: Tensor, sizes: Sequence[int], axis: int = 0) -> List[Tensor]:
    if sum(sizes) != a.shape[axis]:
        raise ShapeError(f"split sizes {list(sizes)} do not cover axis {axis} of {a.shape}")
    parts, start = [], 0
    for size in sizes:
        parts.append(slice_axis(a, start, start + size, axis))
        start += size
    return parts


def add_columns(x: Tensor, b: Tensor) -> Tensor:
    """X + b ⊗ 1ᵀ for a d×I matrix and a d×1 column"""
    x, b = as_tensor(x), as_tensor(b)
    if x.ndim != 2 or b.shape != (x.shape[0], 1):
        raise ShapeError(f"add_columns: column {b.shape} does not fit matrix {x.shape}")
    return _finish(
        "add_columns", x.data + b.data, (x, b), lambda: lambda g: (g, g.sum(axis=1, keepdims=True))
    )


# Reductions


def reduce_sum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    """Sum over one axis (kept as size 1) or over everything (0-d result)"""
    shape = a.shape
    out = a.data.sum() if axis is None else a.data.sum(axis=axis, keepdims=True)
    return _finish(
        "sum", np.asarray(out), (a,), lambda: lambda g: (np.broadcast_to(g, shape).copy(),)
    )


def reduce_mean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    return scale(reduce_sum(a, axis), 1.0 / count)


# Column-wise normalizations


def softmax_columns(a: Tensor) -> Tensor:
    """Softmax down each column so that every column sums to 1"""
    if a.ndim != 2:
        raise ShapeError(f"softmax_columns needs a matrix, got shape {a.shape}")
    shifted = np.exp(a.data - a.data.max(axis=0, keepdims=True))
    out = shifted / shifted.sum(axis=0, keepdims=True)

    def factory():
        def vjp(g):
            return (out * (g - (g * out).sum(axis=0, keepdims=True)),)

        return vjp

    return _finish("softmax_columns", out, (a,), factory)


def layer_norm_columns(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """
    Normalize each column to zero mean and unit variance, then apply a per-feature affine

    Args:
        x: d×I input
        gain: d×1 trainable gain
        bias: d×1 trainable bias
        eps: Added to the variance inside the square root

    Returns:
        gain ⊙ (x − μ)/√(σ² + eps) + bias, column by column
    """
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    if x.ndim != 2 or gain.shape != (x.shape[0], 1) or bias.shape != (x.shape[0], 1):
        raise ShapeError(f"layer_norm_columns: affine {gain.shape}/{bias.shape} does not fit {x.shape}")
    centered = x.data - x.data.mean(axis=0, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=0, keepdims=True) + eps)
    xhat = centered * inv_std
    out = gain.data * xhat + bias.data

    def factory():
        def vjp(g):
            dxhat = g * gain.data
            dx = inv_std * (
                dxhat
                - dxhat.mean(axis=0, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=0, keepdims=True)
            )
            return dx, (g * xhat).sum(axis=1, keepdims=True), g.sum(axis=1, keepdims=True)

        return vjp

    return _finish("layer_norm_columns", out, (x, gain, bias), factory)


def attention_heads(
    x: Tensor, wq: Sequence[Tensor], wk: Sequence[Tensor], wv: Sequence[Tensor], wo: Sequence[Tensor]
) -> Tensor:
    """
    Multi-head self-attention over the columns of X as a single primitive

    Computes Σ_t W_o,t · V_t · softmax_col(K_tᵀ Q_t / √d′) with
    Q_t = W_q,t·X, K_t = W_k,t·X and V_t = W_v,t·X, all heads batched.

    Args:
        x: d×I input
        wq, wk, wv: Per-head d′×d projections
        wo: Per-head d×d′ output maps

    Returns:
        d×I sum of the head outputs

    Raises:
        ShapeError: Head counts or projection shapes disagree with X
    """
    heads = len(wq)
    if heads == 0 or not len(wk) == len(wv) == len(wo) == heads:
        raise ShapeError(f"attention_heads: head counts {len(wq)}/{len(wk)}/{len(wv)}/{len(wo)} differ")
    x = as_tensor(x)
    weights = [as_tensor(w) for w in (*wq, *wk, *wv, *wo)]
    try:
        Wq, Wk, Wv, Wo = (np.stack([w.data for w in weights[i * heads : (i + 1) * heads]]) for i in range(4))
    except ValueError as e:
        raise ShapeError(f"attention_heads: {e}") from e
    d_head = Wq.shape[1]
    if (
        x.ndim != 2
        or Wq.shape != (heads, d_head, x.shape[0])
        or Wk.shape != Wq.shape
        or Wv.shape != Wq.shape
        or Wo.shape != (heads, x.shape[0], d_head)
    ):
        raise ShapeError(f"attention_heads: projections {Wq.shape}/{Wo.shape} do not fit input {x.shape}")

    c = 1.0 / np.sqrt(d_head)
    X = x.data
    Q, K, V = Wq @ X, Wk @ X, Wv @ X
    logits = np.swapaxes(K, 1, 2) @ Q * c
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    A = shifted / shifted.sum(axis=1, keepdims=True)
    M = V @ A
    out = (Wo @ M).sum(axis=0)

    def factory():
        def vjp(g):
            dM = np.swapaxes(Wo, 1, 2) @ g
            dWo = g @ np.swapaxes(M, 1, 2)
            dV = dM @ np.swapaxes(A, 1, 2)
            dA = np.swapaxes(V, 1, 2) @ dM
            dL = A * (dA - (dA * A).sum(axis=1, keepdims=True)) * c
            dQ = K @ dL
            dK = Q @ np.swapaxes(dL, 1, 2)
            dX = (np.swapaxes(Wq, 1, 2) @ dQ + np.swapaxes(Wk, 1, 2) @ dK + np.swapaxes(Wv, 1, 2) @ dV).sum(axis=0)
            return (dX, *(dQ @ X.T), *(dK @ X.T), *(dV @ X.T), *dWo)

        return vjp

    return _finish("attention_heads", out, (x, *weights), factory)


# Composite helpers built only from the primitives above


def broadcast_columns(v: Tensor, count: int) -> Tensor:
    """Repeat an n×1 column `count` times: v·1ᵀ"""
    return matmul(v, np.ones((1, count)))


def broadcast_rows(v: Tensor, count: int) -> Tensor:
    """Stack a 1×n row `count` times: 1·v"""
    return matmul(np.ones((count, 1)), v)


def scale_rows(a: Tensor, weights: Tensor) -> Tensor:
    """diag(weights)·A for an n×1 weight column"""
    return mul(a, broadcast_columns(weights, a.shape[1]))


def scale_columns(a: Tensor, weights: Tensor) -> Tensor:
    """A·diag(weights) for an n×1 weight column"""
    return mul(a, broadcast_rows(transpose(weights), a.shape[0]))


# Operator sugar on Tensor

Tensor.__add__ = add
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = sub
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = mul
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__truediv__ = div
Tensor.__neg__ = neg
Tensor.__matmul__ = matmul
Tensor.T = property(transpose)
