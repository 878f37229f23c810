"""Decoding block: structured solution construction and unrolled constraint steps"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

from ..autodiff import ops
from ..autodiff.tape import Tensor, check_finite
from ..cplx import CTensor, cadd, ceye, chermitian, cmatmul, csolve, csub
from ..errors import ConfigError, ShapeError
from ..qos import Beamformer, grad_violation_values, violation_step
from ..scenario import ChannelInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoderConfig:
    """Step size and unroll depths of the constraint-augmented layers"""

    eta: float = 0.01
    r_train: int = 5
    r_test: int = 50
    # None picks the K×K form whenever K < 2N
    use_woodbury: Optional[bool] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"decoder.eta must be positive, got {self.eta}")
        if self.r_train < 0:
            raise ConfigError(f"decoder.r_train must be >= 0, got {self.r_train}")
        if self.r_test < self.r_train:
            raise ConfigError(f"decoder.r_test={self.r_test} is below r_train={self.r_train}")

    def woodbury_for(self, n_antennas: int, n_users: int) -> bool:
        if self.use_woodbury is None:
            return n_users < 2 * n_antennas
        return self.use_woodbury


def _is_constant(W: CTensor) -> bool:
    return W.re.tape is None and W.im.tape is None


def _scale_rows(a: CTensor, weights: Tensor) -> CTensor:
    return CTensor(ops.scale_rows(a.re, weights), ops.scale_rows(a.im, weights))


def _scale_both(a: CTensor, weights: Tensor) -> CTensor:
    """diag(weights)·A·diag(weights)"""
    return CTensor(
        ops.scale_columns(ops.scale_rows(a.re, weights), weights),
        ops.scale_columns(ops.scale_rows(a.im, weights), weights),
    )


def _group_mixing(inst: ChannelInstance, alpha: CTensor) -> CTensor:
    """K×M matrix with α_k in the column of user k's group"""
    G = inst.group_onehot
    return CTensor(ops.scale_rows(G, alpha.re), ops.scale_rows(G, alpha.im))


def construct_solution(
    inst: ChannelInstance,
    alpha: CTensor,
    lam: Tensor,
    use_woodbury: Optional[bool] = None,
    H: Optional[CTensor] = None,
) -> Beamformer:
    """
    Initial beamformer w_m = (I + Σ_k λ_k γ_k h_k h_kᴴ)⁻¹ H_m α_m

    Args:
        inst: Problem instance (supplies γ and the group layout)
        alpha: K×1 complex combining weights
        lam: K×1 nonnegative weights
        use_woodbury: Solve the K×K push-through system instead of the N×N one;
            None picks it when K < 2N
        H: Channels to differentiate through (defaults to inst.H)

    Returns:
        N×M beamformer; both paths are differentiable in (α, λ, H)
    """
    H = inst.H if H is None else H
    n, k = H.shape
    if alpha.shape != (k, 1) or lam.shape != (k, 1):
        raise ShapeError(f"α {alpha.shape} and λ {lam.shape} must both be ({k}, 1)")
    if use_woodbury is None:
        use_woodbury = k < 2 * n

    B = cmatmul(H, _group_mixing(inst, alpha))
    weights = ops.mul(lam, inst.gamma_users[:, None])

    if not use_woodbury:
        scaled = CTensor(ops.scale_columns(H.re, weights), ops.scale_columns(H.im, weights))
        C = cadd(ceye(n), cmatmul(scaled, chermitian(H)))
        return Beamformer.of(csolve(C, B))

    # (I + A Aᴴ)⁻¹ = I − A (I_K + AᴴA)⁻¹ Aᴴ with A = H·diag(√(λγ)), a Hermitian K×K system
    s = ops.sqrt(weights)
    Hh = chermitian(H)
    gram = cmatmul(Hh, H)
    system = cadd(ceye(k), _scale_both(gram, s))
    solved = csolve(system, _scale_rows(cmatmul(Hh, B), s))
    return Beamformer.of(csub(B, cmatmul(H, _scale_rows(solved, s))))


def constraint_step(inst: ChannelInstance, W: CTensor, eta: float) -> Beamformer:
    """One constraint-augmented layer W − η·∇V; a fixed point wherever V = 0"""
    return violation_step(inst, W, eta)


def constraint_steps(inst: ChannelInstance, W: CTensor, eta: float, r: int) -> Beamformer:
    """
    Apply r constraint steps

    Unrecorded beamformers are stepped on plain arrays and stop early once
    the violation gradient is exactly zero.

    Raises:
        NonFiniteError: An unrecorded result is not finite
    """
    if r < 0:
        raise ConfigError(f"number of constraint steps must be >= 0, got {r}")
    if not _is_constant(W):
        W = Beamformer.of(W)
        for _ in range(r):
            W = constraint_step(inst, W, eta)
        return W

    w = W.numpy()
    for step in range(r):
        grad = grad_violation_values(inst, w)
        if not grad.any():
            logger.debug(f"constraint steps reached a feasible point after {step} of {r}")
            break
        w = w - eta * grad
    check_finite("constraint steps", w)
    return Beamformer.from_complex(w)


def unroll(inst: ChannelInstance, W: CTensor, eta: float) -> Iterator[Beamformer]:
    """Yield W, then W after each further constraint step, indefinitely"""
    W = Beamformer.of(W)
    while True:
        yield W
        W = constraint_step(inst, W, eta)


def decode(
    inst: ChannelInstance,
    alpha: CTensor,
    lam: Tensor,
    cfg: DecoderConfig,
    r: Optional[int] = None,
) -> Beamformer:
    """
    Decoding block g(H, α, λ)

    Args:
        inst: Problem instance
        alpha: K×1 complex weights from the encoder
        lam: K×1 nonnegative weights from the encoder
        cfg: Step size and depths
        r: Constraint steps to run (defaults to cfg.r_test)

    Returns:
        N×M beamformer after construct_solution and r shared-η steps
    """
    r = cfg.r_test if r is None else r
    if r < 0:
        raise ConfigError(f"number of constraint steps must be >= 0, got {r}")
    W = construct_solution(inst, alpha, lam, cfg.woodbury_for(inst.n_antennas, inst.n_users))
    return constraint_steps(inst, W, cfg.eta, r)
