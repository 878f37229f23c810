"""Encoding block: embedding, hierarchical attention layers, de-embedding"""

from typing import Mapping, Sequence, Tuple

from ..autodiff import ops
from ..autodiff.tape import Tensor
from ..cplx import CTensor
from ..errors import ShapeError
from .params import EncoderHyper

Params = Mapping[str, Tensor]


def embed(H: CTensor, params: Params) -> Tensor:
    """
    Project each user channel [Re h; Im h] to a d-dimensional column

    Args:
        H: N×K complex channels
        params: Needs embed.weight (d×2N) and embed.bias (d×1)

    Returns:
        d×K real embedding

    Raises:
        ShapeError: N does not match the embedding width
    """
    weight = params["embed.weight"]
    if weight.shape[1] != 2 * H.shape[0]:
        raise ShapeError(f"embedding expects N={weight.shape[1] // 2} antennas, got {H.shape[0]}")
    stacked = ops.concat([H.re, H.im], axis=0)
    return ops.add_columns(ops.matmul(weight, stacked), params["embed.bias"])


def multi_head_attention(X: Tensor, params: Params, prefix: str, n_heads: int) -> Tensor:
    """Σ_t W_o,t · V_t · softmax_col(K_tᵀ Q_t / √d′) over the heads stored under `prefix`"""
    heads = [f"{prefix}.head{t}" for t in range(n_heads)]
    return ops.attention_heads(
        X, *([params[f"{head}.{name}"] for head in heads] for name in ("wq", "wk", "wv", "wo"))
    )


def feed_forward(Y: Tensor, params: Params, prefix: str) -> Tensor:
    """Same two-layer ReLU network applied to every column"""
    hidden = ops.relu(ops.add_columns(ops.matmul(params[f"{prefix}.ff1.weight"], Y), params[f"{prefix}.ff1.bias"]))
    return ops.add_columns(ops.matmul(params[f"{prefix}.ff2.weight"], hidden), params[f"{prefix}.ff2.bias"])


def self_attention(X: Tensor, params: Params, prefix: str, n_heads: int) -> Tensor:
    """
    One permutation-equivariant sublayer

    Y = Norm(X + MHA(X)), Z = Norm(Y + CFF(Y)).

    Args:
        X: d×I input, one column per set element
        params: Sublayer arrays under `prefix`
        prefix: Parameter name prefix, e.g. "layer0.u1"
        n_heads: Attention heads T

    Returns:
        d×I output; permuting the columns of X permutes the output the same way
    """
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeError(f"self_attention needs a d×I input with I >= 1, got {X.shape}")
    Y = ops.layer_norm_columns(
        ops.add(X, multi_head_attention(X, params, prefix, n_heads)),
        params[f"{prefix}.norm1.gain"],
        params[f"{prefix}.norm1.bias"],
    )
    return ops.layer_norm_columns(
        ops.add(Y, feed_forward(Y, params, prefix)),
        params[f"{prefix}.norm2.gain"],
        params[f"{prefix}.norm2.bias"],
    )


def hierarchical_layer(
    X: Tensor, params: Params, layer: int, group_sizes: Sequence[int], n_heads: int
) -> Tensor:
    """
    Intra-group attention u1 on each group with shared weights, then u2 over all users

    Raises:
        ShapeError: Group sizes do not partition the columns of X
    """
    if sum(group_sizes) != X.shape[1] or min(group_sizes) < 1:
        raise ShapeError(f"group sizes {list(group_sizes)} do not partition {X.shape[1]} columns")
    prefix = f"layer{layer}"
    blocks = ops.split(X, list(group_sizes), axis=1)
    Z = ops.concat([self_attention(block, params, f"{prefix}.u1", n_heads) for block in blocks], axis=1)
    return self_attention(Z, params, f"{prefix}.u2", n_heads)


def deembed(X: Tensor, params: Params) -> Tuple[CTensor, Tensor]:
    """
    Map each column to (α_k, λ_k)

    Returns:
        α as a K×1 complex column (rows 0 and 1), λ = ReLU(row 2) as a K×1 column
    """
    out = ops.transpose(ops.add_columns(ops.matmul(params["deembed.weight"], X), params["deembed.bias"]))
    alpha = CTensor(ops.slice_axis(out, 0, 1, axis=1), ops.slice_axis(out, 1, 2, axis=1))
    lam = ops.relu(ops.slice_axis(out, 2, 3, axis=1))
    return alpha, lam


def encode(H: CTensor, params: Params, hyper: EncoderHyper, group_sizes: Sequence[int]) -> Tuple[CTensor, Tensor]:
    """
    Full encoding block f(H) = (α, λ)

    No parameter depends on K or M, so one parameter set serves every
    group layout with the same antenna count.

    Args:
        H: N×K channels grouped as [H_1 ... H_M]
        params: Bound encoder parameters
        hyper: Architecture (L layers, T heads)
        group_sizes: K_1..K_M

    Returns:
        (α, λ), both K×1 in the column order of H
    """
    X = embed(H, params)
    for layer in range(hyper.n_layers):
        X = hierarchical_layer(X, params, layer, group_sizes, hyper.n_heads)
    return deembed(X, params)
