"""Penalty loss: transmit power plus ρ times constraint violation"""

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..autodiff import ops
from ..autodiff.tape import Tensor
from ..errors import ConfigError, NonFiniteError
from ..model.base import BeamformingModel
from ..qos import total_power, violation_total
from ..scenario import ChannelInstance


@dataclass
class LossTerms:
    """Loss tensor of one instance or batch, with its parts as floats"""

    loss: Tensor
    power: float
    violation: float


def instance_loss(
    model: BeamformingModel,
    inst: ChannelInstance,
    params: Mapping[str, Tensor],
    rho: float,
    r: Optional[int] = None,
    weight: float = 1.0,
) -> LossTerms:
    """
    weight · (Σ_m ‖w_m‖² + ρ·V) for one instance

    Args:
        model: Model producing the beamformer
        inst: Instance in physical units (normalized internally)
        params: Bound parameters
        rho: Penalty weight ρ > 0
        r: Constraint steps (defaults to decoder.r_train)
        weight: Scale of this instance in the batch mean

    Raises:
        NonFiniteError: Loss is NaN or Inf
    """
    if not rho > 0:
        raise ConfigError(f"penalty rho must be positive, got {rho}")
    r = model.decoder.r_train if r is None else r
    norm = inst.normalized()
    W = model.forward(norm, params, r)
    power = total_power(W)
    violation = violation_total(norm, W)
    loss = ops.scale(ops.add(power, ops.scale(violation, rho)), weight)
    value = loss.item()
    if not math.isfinite(value):
        raise NonFiniteError(f"loss is {value} (power {power.item()}, V {violation.item()})")
    return LossTerms(loss=loss, power=power.item(), violation=violation.item())


def batch_loss(
    model: BeamformingModel,
    batch: Sequence[ChannelInstance],
    params: Mapping[str, Tensor],
    rho: float,
    r: Optional[int] = None,
) -> LossTerms:
    """Mean penalty loss of a batch on one tape"""
    if not batch:
        raise ConfigError("batch is empty")
    weight = 1.0 / len(batch)
    terms = [instance_loss(model, inst, params, rho, r, weight) for inst in batch]
    total = terms[0].loss
    for term in terms[1:]:
        total = ops.add(total, term.loss)
    return LossTerms(
        loss=total,
        power=sum(t.power for t in terms) * weight,
        violation=sum(t.violation for t in terms) * weight,
    )
