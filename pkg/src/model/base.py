"""Base beamforming model interface"""

from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from ..autodiff.tape import Tape, Tensor, check_finite
from ..qos import Beamformer
from ..scenario import ChannelInstance
from .decoder import DecoderConfig
from .params import EncoderHyper, ModelParams


class BeamformingModel(ABC):
    """Abstract base class for learned channel-to-beamformer maps"""

    kind: str = ""

    def __init__(self, params: ModelParams, hyper: EncoderHyper, n_antennas: int, decoder: DecoderConfig):
        """
        Initialize model

        Args:
            params: Trainable arrays, validated against expected_shapes
            hyper: Architecture hyperparameters
            n_antennas: Antenna count N the parameters are sized for
            decoder: Constraint-step configuration
        """
        params.check_shapes(self.expected_shapes(hyper, n_antennas))
        self.params = params
        self.hyper = hyper
        self.n_antennas = n_antennas
        self.decoder = decoder

    @classmethod
    @abstractmethod
    def expected_shapes(cls, hyper: EncoderHyper, n_antennas: int) -> "OrderedDict[str, Tuple[int, ...]]":
        """
        Parameter layout for an architecture

        Returns:
            Name to shape, in storage order
        """
        pass

    @abstractmethod
    def forward(self, inst: ChannelInstance, params: Mapping[str, Tensor], r: int) -> Beamformer:
        """
        Build the beamformer graph for one noise-normalized instance

        Args:
            inst: Instance with unit noise power
            params: Bound parameters (tape leaves or constants)
            r: Constraint steps to unroll

        Returns:
            N×M beamformer, recorded on the parameters' tape if any
        """
        pass

    @classmethod
    def create(
        cls,
        hyper: EncoderHyper,
        n_antennas: int,
        decoder: Optional[DecoderConfig] = None,
        seed: int = 0,
    ) -> "BeamformingModel":
        """Fresh model with seeded initial parameters"""
        params = ModelParams.initialize(cls.expected_shapes(hyper, n_antennas), np.random.default_rng(seed))
        return cls(params, hyper, n_antennas, decoder or DecoderConfig())

    def bind(self, tape: Optional[Tape] = None) -> Dict[str, Tensor]:
        return self.params.bind(tape)

    def with_params(self, params: ModelParams) -> "BeamformingModel":
        return type(self)(params, self.hyper, self.n_antennas, self.decoder)

    def infer(self, inst: ChannelInstance, r: Optional[int] = None) -> np.ndarray:
        """
        Beamformer for a raw instance without recording gradients

        Args:
            inst: Instance in physical units
            r: Constraint steps (defaults to decoder.r_test)

        Returns:
            N×M complex array; SINR and power are unchanged by noise normalization

        Raises:
            NonFiniteError: The beamformer has NaN or infinite entries
        """
        r = self.decoder.r_test if r is None else r
        w = self.forward(inst.normalized(), self.bind(), r).to_complex()
        check_finite(f"{self.kind} inference", w)
        return w

    def parameter_count(self) -> int:
        return self.params.size

    def manifest(self) -> Dict[str, Any]:
        """Architecture description stored next to the parameters"""
        return {
            "model": self.kind,
            "n_antennas": self.n_antennas,
            "encoder": self.hyper.to_dict(),
            "decoder": {
                "eta": self.decoder.eta,
                "r_train": self.decoder.r_train,
                "r_test": self.decoder.r_test,
                "use_woodbury": self.decoder.use_woodbury,
            },
        }
