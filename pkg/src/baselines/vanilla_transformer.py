"""Flat self-attention ablation: permutation equivariant over users, blind to groups"""

from collections import OrderedDict
from typing import Mapping, Tuple

from ..autodiff import ops
from ..autodiff.tape import Tensor
from ..cplx import CTensor
from ..model.base import BeamformingModel
from ..model.decoder import constraint_steps
from ..model.encoder import embed, self_attention
from ..model.params import EncoderHyper, attention_block_shapes, embedding_shapes
from ..qos import Beamformer
from ..scenario import ChannelInstance

N_BLOCKS = 4


class VanillaTransformer(BeamformingModel):
    """
    Embedding, four self-attention blocks over all users, then a per-group
    mean and a shared linear map to the group's beamformer.

    Constraint steps, when requested, run after the output layer.
    """

    kind = "vanilla"

    @classmethod
    def expected_shapes(cls, hyper: EncoderHyper, n_antennas: int) -> "OrderedDict[str, Tuple[int, ...]]":
        shapes = embedding_shapes(hyper, n_antennas)
        for block in range(N_BLOCKS):
            shapes.update(attention_block_shapes(f"block{block}", hyper))
        shapes["out.weight"] = (2 * n_antennas, hyper.d)
        shapes["out.bias"] = (2 * n_antennas, 1)
        return shapes

    def forward(self, inst: ChannelInstance, params: Mapping[str, Tensor], r: int) -> Beamformer:
        X = embed(inst.H, params)
        for block in range(N_BLOCKS):
            X = self_attention(X, params, f"block{block}", self.hyper.n_heads)

        offsets = inst.group_offsets
        pooled = ops.concat(
            [ops.reduce_mean(ops.slice_axis(X, offsets[m], offsets[m + 1], axis=1), axis=1) for m in range(inst.n_groups)],
            axis=1,
        )
        out = ops.add_columns(ops.matmul(params["out.weight"], pooled), params["out.bias"])
        n = inst.n_antennas
        W = Beamformer.of(CTensor(ops.slice_axis(out, 0, n, axis=0), ops.slice_axis(out, n, 2 * n, axis=0)))
        return constraint_steps(inst, W, self.decoder.eta, r)
