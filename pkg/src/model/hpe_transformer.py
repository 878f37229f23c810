"""Hierarchical permutation-equivariant transformer for multicast beamforming"""

import logging
from collections import OrderedDict
from typing import Mapping, Tuple

from ..autodiff.tape import Tensor
from ..qos import Beamformer
from ..scenario import ChannelInstance
from .base import BeamformingModel
from .decoder import decode
from .encoder import encode
from .params import EncoderHyper, expected_shapes

logger = logging.getLogger(__name__)


class HPETransformer(BeamformingModel):
    """Encoder f(H) = (α, λ) followed by the structured decoder g(H, α, λ)"""

    kind = "hpe"

    @classmethod
    def expected_shapes(cls, hyper: EncoderHyper, n_antennas: int) -> "OrderedDict[str, Tuple[int, ...]]":
        return expected_shapes(hyper, n_antennas)

    def forward(self, inst: ChannelInstance, params: Mapping[str, Tensor], r: int) -> Beamformer:
        alpha, lam = encode(inst.H, params, self.hyper, inst.group_sizes)
        W = decode(inst, alpha, lam, self.decoder, r)
        logger.debug(f"HPE forward: K={inst.n_users}, M={inst.n_groups}, r={r}")
        return W
