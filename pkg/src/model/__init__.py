"""Learned beamforming models: HPE encoder, structured decoder, model facade"""

from .base import BeamformingModel
from .decoder import DecoderConfig, construct_solution, constraint_step, constraint_steps, decode, unroll
from .encoder import deembed, embed, encode, hierarchical_layer, self_attention
from .hpe_transformer import HPETransformer
from .params import EncoderHyper, ModelParams, attention_block_shapes, expected_shapes, parameter_count

__all__ = [
    "BeamformingModel",
    "DecoderConfig",
    "construct_solution",
    "constraint_step",
    "constraint_steps",
    "decode",
    "unroll",
    "deembed",
    "embed",
    "encode",
    "hierarchical_layer",
    "self_attention",
    "HPETransformer",
    "EncoderHyper",
    "ModelParams",
    "attention_block_shapes",
    "expected_shapes",
    "parameter_count",
]
