"""Adam optimizer over named parameter arrays"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..errors import ShapeError
from ..model.params import ModelParams

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter"""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={name: np.zeros_like(value) for name, value in params.arrays.items()},
            v={name: np.zeros_like(value) for name, value in params.arrays.items()},
        )


def adam_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPS,
) -> Tuple[ModelParams, AdamState]:
    """
    One bias-corrected Adam update

    Args:
        params: Current parameters (left unchanged)
        grads: Gradient per parameter name
        state: Moments from previous steps
        lr: Learning rate τ

    Returns:
        New parameters and new state

    Raises:
        ShapeError: Gradients or state do not match the parameters
    """
    t = state.t + 1
    new_arrays, new_m, new_v = {}, {}, {}
    for name, value in params.arrays.items():
        if name not in grads or name not in state.m:
            raise ShapeError(f"no gradient or optimizer state for parameter {name}")
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape or state.m[name].shape != value.shape:
            raise ShapeError(f"parameter {name} has shape {value.shape}, gradient {g.shape}")
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_arrays[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name], new_v[name] = m, v
    return ModelParams(new_arrays), AdamState(m=new_m, v=new_v, t=t)
