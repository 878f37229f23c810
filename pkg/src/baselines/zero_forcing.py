"""Zero-forcing initialization: null inter-group interference, then scale each group up to its target"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import null_space

from ..qos import sinr_values
from ..scenario import ChannelInstance

logger = logging.getLogger(__name__)

BISECTION_STEPS = 200
MAX_SCALE = 1e12
FALLBACK_SWEEPS = 50
# ridge weight of the regularized projection, relative to the strongest channel
FALLBACK_RIDGE = 1e-2


@dataclass
class ZeroForcingResult:
    """Zero-forcing beamformer and how it was obtained"""

    W: np.ndarray
    feasible: bool
    used_fallback: bool
    scales: np.ndarray

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.W) ** 2))


def _other_columns(inst: ChannelInstance, m: int) -> np.ndarray:
    offsets = inst.group_offsets
    return np.concatenate([inst.h[:, : offsets[m]], inst.h[:, offsets[m + 1] :]], axis=1)


def _dominant_direction(basis: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Unit vector in span(basis) best aligned with the columns of block"""
    u, _, _ = np.linalg.svd(basis.conj().T @ block, full_matrices=False)
    direction = basis @ u[:, 0]
    return direction / np.linalg.norm(direction)


def _zf_direction(inst: ChannelInstance, m: int):
    """Direction orthogonal to all other groups' channels, or None if that space is empty"""
    others = _other_columns(inst, m)
    if others.shape[1] == 0:
        return _dominant_direction(np.eye(inst.n_antennas), inst.group(m))
    basis = null_space(others.conj().T)
    if basis.shape[1] == 0:
        return None
    return _dominant_direction(basis, inst.group(m))


def _regularized_direction(inst: ChannelInstance, m: int) -> np.ndarray:
    """Dominant direction of (I·ε + A Aᴴ)⁻¹ H_m with A the other groups' channels"""
    others = _other_columns(inst, m)
    ridge = FALLBACK_RIDGE * float(np.max(np.sum(np.abs(inst.h) ** 2, axis=0)))
    cov = others @ others.conj().T + ridge * np.eye(inst.n_antennas)
    block = np.linalg.solve(cov, inst.group(m))
    return _dominant_direction(np.eye(inst.n_antennas), block)


def bisect_scale(meets_target: Callable[[float], bool], guess: float) -> float:
    """
    Smallest scale (to bisection accuracy) for which meets_target holds

    meets_target must be monotone in the scale. Returns the upper bracket so
    that the result always satisfies it, or MAX_SCALE if nothing does.
    """
    lo, hi = 0.0, max(guess, 1e-300)
    while not meets_target(hi):
        lo, hi = hi, hi * 2.0
        if hi > MAX_SCALE:
            return MAX_SCALE
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if meets_target(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _scale_group(inst: ChannelInstance, W: np.ndarray, m: int, direction: np.ndarray) -> float:
    """Set column m to t·direction with the smallest t meeting group m's SINR targets"""
    offsets = inst.group_offsets
    users = slice(offsets[m], offsets[m + 1])
    gamma = inst.gamma_lin[m]
    gains = np.abs(inst.group(m).conj().T @ direction) ** 2
    guess = np.sqrt(np.max(gamma * inst.sigma2[users] / np.maximum(gains, 1e-300)))

    def meets_target(t: float) -> bool:
        W[:, m] = t * direction
        return bool(np.all(sinr_values(inst, W)[users] >= gamma))

    t = bisect_scale(meets_target, guess)
    W[:, m] = t * direction
    return t


def zf_init(inst: ChannelInstance) -> ZeroForcingResult:
    """
    Zero-forcing beamformer meeting every SINR target

    Each group's direction lies in the nullspace of the other groups'
    channels (needs N > K − K_m), so groups do not interfere and each is
    scaled independently. When some nullspace is empty a regularized
    projection is used instead and the group scales are refined by
    Gauss-Seidel sweeps; the result reports this and whether it is feasible.

    Args:
        inst: Problem instance

    Returns:
        ZeroForcingResult with the N×M beamformer
    """
    n, m_groups = inst.n_antennas, inst.n_groups
    directions = [_zf_direction(inst, m) for m in range(m_groups)]
    used_fallback = any(d is None for d in directions)
    W = np.zeros((n, m_groups), dtype=np.complex128)
    scales = np.zeros(m_groups)

    if not used_fallback:
        for m, direction in enumerate(directions):
            scales[m] = _scale_group(inst, W, m, direction)
    else:
        logger.warning(
            f"Zero-forcing nullspace empty (N={n}, K={inst.n_users}, groups {inst.group_sizes}); "
            "using regularized projection"
        )
        directions = [_regularized_direction(inst, m) for m in range(m_groups)]
        for sweep in range(FALLBACK_SWEEPS):
            for m, direction in enumerate(directions):
                scales[m] = _scale_group(inst, W, m, direction)
            if np.all(sinr_values(inst, W) >= inst.gamma_users):
                logger.debug(f"Fallback scaling feasible after {sweep + 1} sweeps")
                break

    feasible = bool(np.all(sinr_values(inst, W) >= inst.gamma_users))
    if not feasible:
        logger.warning("Zero-forcing initialization could not meet every SINR target")
    return ZeroForcingResult(W=W, feasible=feasible, used_fallback=used_fallback, scales=scales)
