"""Finite-difference gradient checking"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .tape import Tape, Tensor, backward

REL_FLOOR = 1e-12


@dataclass
class GradCheckResult:
    """Comparison of reverse-mode and central-difference gradients"""

    max_rel_error: float
    max_norm_error: float
    analytic: np.ndarray
    numeric: np.ndarray

    def passed(self, tol: float) -> bool:
        return self.max_rel_error <= tol


def fd_step(x: float) -> float:
    return 1e-6 * (1.0 + abs(x))


def grad_check(
    builder: Callable[[Tensor], Tensor],
    point,
    step: Optional[float] = None,
) -> GradCheckResult:
    """
    Compare backward() against central differences

    Args:
        builder: Deterministic map from an input tensor to a scalar tensor
        point: Where to evaluate; keep it away from ReLU kinks
        step: Fixed difference step (default 1e-6·(1+|x|) per coordinate)

    Returns:
        Both gradients plus the max per-coordinate relative error
        |autodiff − fd| / (|fd| + 1e-12) and the max error relative to the
        largest fd entry. Never raises on disagreement.
    """
    point = np.array(point, dtype=np.float64)
    tape = Tape()
    x = tape.leaf(point)
    analytic = backward(tape, builder(x))[x]

    def evaluate(values: np.ndarray) -> float:
        return builder(Tensor(values)).item()

    numeric = np.zeros_like(point)
    for idx in np.ndindex(point.shape):
        h = step if step is not None else fd_step(point[idx])
        plus, minus = point.copy(), point.copy()
        plus[idx] += h
        minus[idx] -= h
        numeric[idx] = (evaluate(plus) - evaluate(minus)) / (2.0 * h)

    diff = np.abs(analytic - numeric)
    rel = diff / (np.abs(numeric) + REL_FLOOR)
    scale = np.abs(numeric).max() if numeric.size else 0.0
    return GradCheckResult(
        max_rel_error=float(rel.max()) if rel.size else 0.0,
        max_norm_error=float(diff.max() / (scale + REL_FLOOR)) if diff.size else 0.0,
        analytic=analytic,
        numeric=numeric,
    )
