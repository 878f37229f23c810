"""QoS problem semantics: SINR, power, constraint violation"""

from .metrics import (
    Beamformer,
    cv,
    grad_violation,
    grad_violation_values,
    is_feasible,
    mrt_oracle,
    rotate_phase,
    sinr,
    sinr_margin,
    sinr_values,
    total_power,
    violation_mk,
    violation_step,
    violation_total,
    violations,
)

__all__ = [
    "Beamformer",
    "cv",
    "grad_violation",
    "grad_violation_values",
    "is_feasible",
    "mrt_oracle",
    "rotate_phase",
    "sinr",
    "sinr_margin",
    "sinr_values",
    "total_power",
    "violation_mk",
    "violation_step",
    "violation_total",
    "violations",
]
