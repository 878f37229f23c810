"""SINR, transmit power and constraint-violation metrics, all recorded on the tape"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..autodiff import ops
from ..autodiff.tape import Tensor, check_finite, tape_of
from ..cplx import CTensor, abs2, chermitian, cmatmul, cmul_real
from ..errors import ShapeError
from ..scenario import ChannelInstance


class Beamformer(CTensor):
    """Complex N×M beamforming matrix, column m serving group m"""

    __slots__ = ()

    @classmethod
    def from_complex(cls, w) -> "Beamformer":
        w = np.asarray(w, dtype=np.complex128)
        if w.ndim != 2:
            raise ShapeError(f"beamformer must be N×M, got shape {w.shape}")
        return cls(Tensor(w.real), Tensor(w.imag))

    @classmethod
    def of(cls, w: CTensor) -> "Beamformer":
        return w if isinstance(w, Beamformer) else cls(w.re, w.im)

    @classmethod
    def zeros(cls, n_antennas: int, n_groups: int) -> "Beamformer":
        return cls(np.zeros((n_antennas, n_groups)), np.zeros((n_antennas, n_groups)))

    def to_complex(self) -> np.ndarray:
        return self.numpy()

    @property
    def n_antennas(self) -> int:
        return self.shape[0]

    @property
    def n_groups(self) -> int:
        return self.shape[1]


BeamformerLike = Union[CTensor, np.ndarray]


def _as_ctensor(W: BeamformerLike) -> CTensor:
    return W if isinstance(W, CTensor) else Beamformer.from_complex(W)


def _check(inst: ChannelInstance, W: CTensor) -> None:
    if W.shape != (inst.n_antennas, inst.n_groups):
        raise ShapeError(
            f"beamformer shape {W.shape} does not match N={inst.n_antennas}, M={inst.n_groups}"
        )


def _sinr_parts(inst: ChannelInstance, W: CTensor) -> Tuple[CTensor, Tensor, Tensor]:
    """Return S = HᴴW, the interference-plus-noise column D and the SINR column"""
    S = cmatmul(chermitian(inst.H), W)
    P = abs2(S)
    signal = ops.reduce_sum(ops.mul(P, inst.group_onehot), axis=1)
    interference = ops.sub(ops.reduce_sum(P, axis=1), signal)
    D = ops.add(interference, inst.sigma2[:, None])
    return S, D, ops.div(signal, D)


def sinr(inst: ChannelInstance, W: BeamformerLike) -> Tensor:
    """
    Per-user SINR |h_kᴴ w_m|² / (Σ_{j≠m} |h_kᴴ w_j|² + σ²_k)

    Args:
        inst: Problem instance
        W: N×M beamformer (tensor or complex array)

    Returns:
        K×1 tensor, users in instance column order

    Raises:
        ShapeError: W does not match the instance
    """
    W = _as_ctensor(W)
    _check(inst, W)
    return _sinr_parts(inst, W)[2]


def total_power(W: BeamformerLike) -> Tensor:
    """Σ_m ‖w_m‖² as a 0-d tensor"""
    return ops.reduce_sum(abs2(_as_ctensor(W)))


def violations(inst: ChannelInstance, W: BeamformerLike) -> Tensor:
    """K×1 column of ReLU(γ_m − SINR_{m,k})"""
    return ops.relu(ops.sub(inst.gamma_users[:, None], sinr(inst, W)))


def violation_mk(inst: ChannelInstance, W: BeamformerLike, m: int, k: int) -> Tensor:
    """Shortfall of user k of group m as a 1×1 tensor"""
    if not (0 <= m < inst.n_groups and 0 <= k < inst.group_sizes[m]):
        raise ShapeError(f"no user {k} in group {m} for group sizes {inst.group_sizes}")
    row = int(inst.group_offsets[m]) + k
    return ops.slice_axis(violations(inst, W), row, row + 1, axis=0)


def violation_total(inst: ChannelInstance, W: BeamformerLike) -> Tensor:
    """V = Σ V_{m,k}², zero exactly when every SINR constraint holds"""
    return ops.reduce_sum(ops.square(violations(inst, W)))


def cv(inst: ChannelInstance, W: BeamformerLike) -> Tensor:
    """Mean relative shortfall (1/K) Σ V_{m,k}/γ_m"""
    return ops.reduce_mean(ops.div(violations(inst, W), inst.gamma_users[:, None]))


def grad_violation(inst: ChannelInstance, W: BeamformerLike) -> CTensor:
    """
    Steepest-descent gradient 2·∂V/∂W* of the violation functional

    The result is an ordinary differentiable graph of W, so a step
    W − η·∇V can itself be backpropagated through.

    Args:
        inst: Problem instance
        W: N×M beamformer

    Returns:
        N×M complex gradient; exactly zero when every constraint holds
    """
    W = _as_ctensor(W)
    _check(inst, W)
    S, D, snr = _sinr_parts(inst, W)
    v = ops.relu(ops.sub(inst.gamma_users[:, None], snr))

    # ∂V/∂P_kj = −2 (v_k/D_k) (G_kj − (1 − G_kj) SINR_k), and ∂P/∂w_j* = S_kj h_k
    G = inst.group_onehot
    inner = ops.sub(G, ops.mul(1.0 - G, ops.broadcast_columns(snr, inst.n_groups)))
    coef = ops.scale(ops.scale_rows(inner, ops.div(v, D)), -4.0)
    return cmatmul(inst.H, cmul_real(S, coef))


@dataclass(frozen=True)
class _ViolationTerms:
    """Intermediate arrays of the closed-form violation gradient at one W"""

    S: np.ndarray
    G: np.ndarray
    D: np.ndarray
    snr: np.ndarray
    slack: np.ndarray
    v: np.ndarray
    inner: np.ndarray
    coef: np.ndarray

    @classmethod
    def at(cls, inst: ChannelInstance, w: np.ndarray) -> "_ViolationTerms":
        if w.shape != (inst.n_antennas, inst.n_groups):
            raise ShapeError(f"beamformer shape {w.shape} does not match N={inst.n_antennas}, M={inst.n_groups}")
        S = inst.h.conj().T @ w
        P = S.real**2 + S.imag**2
        G = inst.group_onehot
        signal = (P * G).sum(axis=1)
        D = P.sum(axis=1) - signal + inst.sigma2
        snr = signal / D
        slack = inst.gamma_users - snr
        v = np.maximum(slack, 0.0)
        inner = G - (1.0 - G) * snr[:, None]
        return cls(S, G, D, snr, slack, v, inner, -4.0 * (v / D)[:, None] * inner)

    def gradient(self, h: np.ndarray) -> np.ndarray:
        return h @ (self.S * self.coef)

    def gradient_vjp(self, h: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Cotangent of W for a complex cotangent g of the gradient H·(S ⊙ coef)"""
        T_bar = h.conj().T @ g
        C_bar = (self.S.conj() * T_bar).real
        u = self.v / self.D
        u_bar = -4.0 * (C_bar * self.inner).sum(axis=1)
        snr_bar = 4.0 * u * (C_bar * (1.0 - self.G)).sum(axis=1) - (u_bar / self.D) * (self.slack > 0)
        D_bar = -(u_bar * u + snr_bar * self.snr) / self.D
        signal_bar = snr_bar / self.D
        P_bar = D_bar[:, None] + (signal_bar - D_bar)[:, None] * self.G
        return h @ (T_bar * self.coef + 2.0 * P_bar * self.S)


def grad_violation_values(inst: ChannelInstance, w: np.ndarray) -> np.ndarray:
    """grad_violation on plain complex arrays, for steps that are not recorded"""
    return _ViolationTerms.at(inst, np.asarray(w, dtype=np.complex128)).gradient(inst.h)


def violation_step(inst: ChannelInstance, W: BeamformerLike, eta: float) -> Beamformer:
    """
    W − η·∇V as a single recorded primitive

    Same values as stepping with grad_violation, with the adjoint of the
    whole step written out instead of recorded op by op.

    Args:
        inst: Problem instance
        W: N×M beamformer, recorded on a tape or constant
        eta: Step size

    Returns:
        Stepped beamformer on W's tape (if any)
    """
    W = _as_ctensor(W)
    _check(inst, W)
    w = W.numpy()
    terms = _ViolationTerms.at(inst, w)
    out = w - eta * terms.gradient(inst.h)
    tape = tape_of(W.re, W.im)
    if tape is None:
        return Beamformer.from_complex(out)

    n = inst.n_antennas
    stacked = np.concatenate([out.real, out.imag], axis=0)
    check_finite("violation_step", stacked)

    def vjp(g):
        g = g[:n] + 1j * g[n:]
        w_bar = g - eta * terms.gradient_vjp(inst.h, g)
        return w_bar.real, w_bar.imag

    node = tape.record("violation_step", stacked, (W.re, W.im), vjp)
    return Beamformer(ops.slice_axis(node, 0, n), ops.slice_axis(node, n, 2 * n))


def sinr_values(inst: ChannelInstance, W: BeamformerLike) -> np.ndarray:
    return sinr(inst, W).data.reshape(-1)


def sinr_margin(inst: ChannelInstance, W: BeamformerLike) -> np.ndarray:
    """Per-user SINR − γ; negative entries are violated constraints"""
    return sinr_values(inst, W) - inst.gamma_users


def is_feasible(inst: ChannelInstance, W: BeamformerLike, tol: float = 0.0) -> bool:
    return bool(np.all(sinr_margin(inst, W) >= -tol))


def rotate_phase(W, m: int, theta: float) -> np.ndarray:
    """Copy of W with column m multiplied by e^{iθ}"""
    out = np.array(W.numpy() if isinstance(W, CTensor) else W, dtype=np.complex128)
    out[:, m] *= np.exp(1j * theta)
    return out


def mrt_oracle(inst: ChannelInstance) -> Tuple[Beamformer, float]:
    """
    Closed-form optimum for one group with one user

    Returns:
        w = √(γσ²)·h/‖h‖² and its power γσ²/‖h‖²

    Raises:
        ShapeError: Instance is not a single-user single-group problem
    """
    if inst.n_groups != 1 or inst.n_users != 1:
        raise ShapeError(f"mrt_oracle needs M=1, K=1, got M={inst.n_groups}, K={inst.n_users}")
    h = inst.h[:, 0]
    norm2 = float(np.vdot(h, h).real)
    target = float(inst.gamma_lin[0] * inst.sigma2[0])
    w = np.sqrt(target) * h / norm2
    return Beamformer.from_complex(w[:, None]), target / norm2
