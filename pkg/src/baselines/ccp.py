"""Convex-concave procedure for QoS multicast beamforming"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from ..errors import ConfigError
from ..scenario import ChannelInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CcpConfig:
    """Outer iterations and the augmented-Lagrangian inner solver schedule"""

    max_outer: int = 10
    # stop early once the relative power decrease falls below this
    outer_tol: float = 1e-10
    inner_tol: float = 1e-9
    inner_max_iter: int = 30
    lbfgs_max_iter: int = 2000
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e10
    # linearized constraints are tightened by this fraction of γ
    margin: float = 1e-8
    backtrack_steps: int = 30

    def __post_init__(self):
        for name in ("max_outer", "inner_max_iter", "lbfgs_max_iter", "backtrack_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"ccp.{name} must be >= 1, got {getattr(self, name)}")
        for name in ("inner_tol", "penalty_init", "penalty_max", "margin"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"ccp.{name} must be positive, got {getattr(self, name)}")
        if self.outer_tol < 0:
            raise ConfigError(f"ccp.outer_tol must be >= 0, got {self.outer_tol}")
        if not self.penalty_growth > 1:
            raise ConfigError(f"ccp.penalty_growth must exceed 1, got {self.penalty_growth}")


@dataclass
class CcpResult:
    """Final beamformer plus per-iteration history"""

    W: np.ndarray
    power_trace: List[float] = field(default_factory=list)
    feasible_trace: List[bool] = field(default_factory=list)
    converged: bool = True
    warning: Optional[str] = None

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.W) ** 2))

    @property
    def iterations(self) -> int:
        return len(self.power_trace) - 1


class _Subproblem:
    """
    min ‖X‖² s.t. ĝ_k(X) ≤ 0, the constraints linearized at X̄ and divided by γ_k:

    ĝ_k = Σ_{j≠m} |h_kᴴ x_j|² + 1 − (2 Re{s̄_k* h_kᴴ x_m} − |s̄_k|²)/γ_k + margin
    """

    def __init__(self, h: np.ndarray, onehot: np.ndarray, gamma: np.ndarray, X_bar: np.ndarray, margin: float):
        self.h = h
        self.G = onehot
        self.gamma = gamma
        self.margin = margin
        self.groups = np.argmax(onehot, axis=1)
        # s̄_k = h_kᴴ x̄_{m(k)}
        self.s_bar = np.sum((h.conj().T @ X_bar) * onehot, axis=1)
        self.shape = X_bar.shape

    def constraints(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        S = self.h.conj().T @ X
        interference = np.sum(np.abs(S) ** 2 * (1.0 - self.G), axis=1)
        own = np.sum(S * self.G, axis=1)
        linear = (2.0 * np.real(np.conj(self.s_bar) * own) - np.abs(self.s_bar) ** 2) / self.gamma
        return interference + 1.0 - linear + self.margin, S

    def pack(self, X: np.ndarray) -> np.ndarray:
        return np.concatenate([X.real.ravel(), X.imag.ravel()])

    def unpack(self, x: np.ndarray) -> np.ndarray:
        half = x.size // 2
        return (x[:half] + 1j * x[half:]).reshape(self.shape)

    def augmented_lagrangian(self, x: np.ndarray, mu: np.ndarray, c: float) -> Tuple[float, np.ndarray]:
        """Value and real gradient of ‖X‖² + (1/2c) Σ (max(0, μ + c·ĝ)² − μ²)"""
        X = self.unpack(x)
        g, S = self.constraints(X)
        mult = np.maximum(0.0, mu + c * g)
        value = float(np.sum(np.abs(X) ** 2) + np.sum(mult**2 - mu**2) / (2.0 * c))
        # 2∂/∂X*: own column −2 s̄_k/γ_k, other columns 2 S_kj
        omega = mult[:, None] * ((1.0 - self.G) * 2.0 * S - self.G * (2.0 * self.s_bar / self.gamma)[:, None])
        grad = 2.0 * X + self.h @ omega
        return value, self.pack(grad)


def _original_feasible(h: np.ndarray, onehot: np.ndarray, gamma: np.ndarray, X: np.ndarray, tol: float) -> bool:
    P = np.abs(h.conj().T @ X) ** 2
    signal = np.sum(P * onehot, axis=1)
    interference = np.sum(P, axis=1) - signal
    return bool(np.all(signal >= gamma * (interference + 1.0) * (1.0 - tol)))


def _solve_subproblem(sub: _Subproblem, X0: np.ndarray, cfg: CcpConfig) -> Tuple[np.ndarray, bool]:
    """Augmented-Lagrangian loop; returns the last inner iterate and whether it converged"""
    mu = np.zeros(sub.gamma.size)
    c = cfg.penalty_init
    x = sub.pack(X0)
    prev_violation = np.inf
    for it in range(cfg.inner_max_iter):
        res = minimize(
            sub.augmented_lagrangian,
            x,
            args=(mu, c),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": cfg.lbfgs_max_iter, "ftol": 1e-15, "gtol": 1e-12},
        )
        x = res.x
        g, _ = sub.constraints(sub.unpack(x))
        mu = np.maximum(0.0, mu + c * g)
        violation = float(np.max(np.maximum(g, 0.0)))
        complementarity = float(np.max(np.abs(np.minimum(-g, mu)))) if mu.size else 0.0
        logger.debug(f"CCP inner {it}: violation {violation:.3e}, complementarity {complementarity:.3e}, c={c:.1e}")
        if violation <= cfg.inner_tol and complementarity <= cfg.inner_tol:
            return sub.unpack(x), True
        if violation > 0.25 * prev_violation:
            c = min(c * cfg.penalty_growth, cfg.penalty_max)
        prev_violation = violation
    return sub.unpack(x), False


def ccp_solve(inst: ChannelInstance, init: np.ndarray, cfg: Optional[CcpConfig] = None) -> CcpResult:
    """
    Sequential convexification of the QoS power-minimization problem

    Each outer iteration replaces |h_kᴴ w_m|² by its tangent at the current
    point, which under-estimates it, so every subproblem solution is
    feasible for the original constraints. Candidates are accepted along
    the segment from the current point only if they stay feasible and do
    not increase power.

    Args:
        inst: Problem instance
        init: Feasible N×M starting beamformer (normally zero-forcing)
        cfg: Solver configuration

    Returns:
        CcpResult; on inner non-convergence the last accepted iterate is
        returned with `converged` False and a warning message
    """
    cfg = cfg or CcpConfig()
    norm = inst.normalized()
    gamma = norm.gamma_users
    onehot = norm.group_onehot

    W = np.array(init, dtype=np.complex128)
    power = float(np.sum(np.abs(W) ** 2))
    feasible = _original_feasible(norm.h, onehot, gamma, W, tol=cfg.margin)
    if not feasible:
        logger.warning("CCP started from an infeasible point")
    # work with unit initial power: X = W/scale against channels h·scale
    scale = np.sqrt(power) if power > 0 else 1.0
    h = norm.h * scale
    X = W / scale

    result = CcpResult(W=W.copy(), power_trace=[power], feasible_trace=[feasible])
    moved = False
    for outer in range(cfg.max_outer):
        sub = _Subproblem(h, onehot, gamma, X, cfg.margin)
        candidate, converged = _solve_subproblem(sub, X, cfg)
        if not converged:
            result.converged = False
            result.warning = f"inner solver did not converge at outer iteration {outer}"
            logger.warning(f"CCP: {result.warning}")

        current = float(np.sum(np.abs(X) ** 2))
        accepted = None
        theta = 1.0
        for _ in range(cfg.backtrack_steps):
            trial = X + theta * (candidate - X)
            trial_ok = _original_feasible(h, onehot, gamma, trial, tol=0.0)
            if trial_ok and (not feasible or np.sum(np.abs(trial) ** 2) <= current):
                accepted = trial
                break
            if not feasible:
                break
            theta *= 0.5

        if accepted is not None:
            X = accepted
            feasible = moved = True
        new_power = float(np.sum(np.abs(X) ** 2)) * scale**2
        result.power_trace.append(new_power)
        result.feasible_trace.append(feasible)
        logger.debug(f"CCP outer {outer}: power {new_power:.6e}, step {theta if accepted is not None else 0.0}")

        previous, power = power, new_power
        if not converged or accepted is None:
            break
        if previous - new_power <= cfg.outer_tol * previous:
            break

    # an unmoved start is returned as given, not rescaled
    if moved:
        result.W = X * scale
    return result
