"""Optimization and learning baselines"""

from .ccp import CcpConfig, CcpResult, ccp_solve
from .vanilla_transformer import VanillaTransformer
from .zero_forcing import ZeroForcingResult, zf_init

__all__ = ["CcpConfig", "CcpResult", "ccp_solve", "VanillaTransformer", "ZeroForcingResult", "zf_init"]
