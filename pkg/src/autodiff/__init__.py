"""Reverse-mode automatic differentiation over dense float64 tensors"""

from . import ops
from .gradcheck import GradCheckResult, grad_check
from .tape import GradientMap, Tape, Tensor, backward

__all__ = ["Tensor", "Tape", "GradientMap", "backward", "grad_check", "GradCheckResult", "ops"]
