"""Problem instances: geometry, path loss and Rayleigh fading"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..cplx import CTensor
from ..errors import ConfigError, InvalidInstanceError

logger = logging.getLogger(__name__)

PATHLOSS_INTERCEPT_DB = 32.6
PATHLOSS_SLOPE_DB = 36.7


def pathloss_db(distance_m):
    """
    Large-scale path loss 32.6 + 36.7·log10(D) in dB

    Args:
        distance_m: BS-to-user distance in meters (scalar or array)

    Raises:
        InvalidInstanceError: Any distance is not positive
    """
    d = np.asarray(distance_m, dtype=np.float64)
    if np.any(d <= 0):
        raise InvalidInstanceError(f"distance must be positive, got {distance_m}")
    out = PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * np.log10(d)
    return float(out) if out.ndim == 0 else out


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=np.float64) - 30.0) / 10.0)


def watt_to_dbm(p_watt):
    return 10.0 * np.log10(np.asarray(p_watt, dtype=np.float64)) + 30.0


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=np.float64) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation setting for instance generation"""

    n_antennas: int = 8
    group_sizes: Tuple[int, ...] = (4,)
    sinr_target_db: Tuple[float, ...] = (10.0,)
    noise_dbm: float = -100.0
    bs_xyz: Tuple[float, float, float] = (0.0, 0.0, 20.0)
    # x_min, x_max, y_min, y_max
    user_box: Tuple[float, float, float, float] = (85.0, 95.0, 85.0, 115.0)
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(k) for k in np.atleast_1d(self.group_sizes))
        targets = tuple(float(g) for g in np.atleast_1d(self.sinr_target_db))
        if len(targets) == 1 and len(sizes) > 1:
            targets = targets * len(sizes)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "sinr_target_db", targets)
        object.__setattr__(self, "bs_xyz", tuple(float(v) for v in self.bs_xyz))
        object.__setattr__(self, "user_box", tuple(float(v) for v in self.user_box))

        if self.n_antennas < 1:
            raise ConfigError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if not sizes:
            raise ConfigError("at least one multicast group is required")
        if min(sizes) < 1:
            raise ConfigError(f"every group needs at least one user, got {sizes}")
        if len(targets) != len(sizes):
            raise ConfigError(f"{len(targets)} SINR targets for {len(sizes)} groups")
        if len(self.bs_xyz) != 3:
            raise ConfigError(f"bs_xyz needs 3 coordinates, got {self.bs_xyz}")
        x0, x1, y0, y1 = self.user_box
        if not (x0 < x1 and y0 < y1):
            raise ConfigError(f"user_box {self.user_box} is empty")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def n_users(self) -> int:
        return sum(self.group_sizes)

    def with_groups(self, group_sizes: Sequence[int], sinr_target_db=None) -> "ScenarioConfig":
        """Same setting with another group layout; targets default to the first group's"""
        if sinr_target_db is None:
            sinr_target_db = (self.sinr_target_db[0],)
        return replace(self, group_sizes=tuple(group_sizes), sinr_target_db=sinr_target_db)


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    """
    One QoS multicast problem

    h holds the user channels column by column, grouped as [H_1 ... H_M].
    """

    h: np.ndarray
    group_sizes: Tuple[int, ...]
    sigma2: np.ndarray
    gamma_lin: np.ndarray
    positions: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=np.complex128)
        sizes = tuple(int(k) for k in self.group_sizes)
        sigma2 = np.array(self.sigma2, dtype=np.float64).reshape(-1)
        gamma = np.array(self.gamma_lin, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "gamma_lin", gamma)

        if h.ndim != 2:
            raise InvalidInstanceError(f"channel matrix must be N×K, got shape {h.shape}")
        if not sizes or min(sizes) < 1:
            raise InvalidInstanceError(f"invalid group sizes {sizes}")
        if h.shape[1] != sum(sizes):
            raise InvalidInstanceError(f"{h.shape[1]} channel columns for group sizes {sizes}")
        if sigma2.shape != (h.shape[1],):
            raise InvalidInstanceError(f"{sigma2.size} noise powers for {h.shape[1]} users")
        if gamma.shape != (len(sizes),):
            raise InvalidInstanceError(f"{gamma.size} SINR targets for {len(sizes)} groups")
        if not np.all(np.isfinite(h)):
            raise InvalidInstanceError("channel matrix has non-finite entries")
        if np.any(sigma2 <= 0) or np.any(gamma <= 0):
            raise InvalidInstanceError("noise powers and SINR targets must be positive")

    @property
    def n_antennas(self) -> int:
        return self.h.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[1]

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def group_offsets(self) -> np.ndarray:
        """Prefix sums of the group sizes, starting at 0 (length M+1)"""
        return np.concatenate([[0], np.cumsum(self.group_sizes)]).astype(int)

    @property
    def user_groups(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_groups), self.group_sizes)

    @property
    def gamma_users(self) -> np.ndarray:
        return self.gamma_lin[self.user_groups]

    @property
    def gamma_db(self) -> np.ndarray:
        return lin_to_db(self.gamma_lin)

    @property
    def group_onehot(self) -> np.ndarray:
        """K×M indicator of each user's group"""
        onehot = np.zeros((self.n_users, self.n_groups))
        onehot[np.arange(self.n_users), self.user_groups] = 1.0
        return onehot

    @property
    def H(self) -> CTensor:
        return CTensor.from_numpy(self.h)

    def group(self, m: int) -> np.ndarray:
        offsets = self.group_offsets
        return self.h[:, offsets[m] : offsets[m + 1]]

    def normalized(self) -> "ChannelInstance":
        """Equivalent instance with unit noise power (h_k scaled by 1/σ_k)"""
        return ChannelInstance(
            h=self.h / np.sqrt(self.sigma2)[None, :],
            group_sizes=self.group_sizes,
            sigma2=np.ones(self.n_users),
            gamma_lin=self.gamma_lin,
            positions=self.positions,
        )

    def column_permutation(self, group_order: Sequence[int], user_orders: Sequence[Sequence[int]]) -> np.ndarray:
        """
        Column index map for a hierarchical permutation

        Args:
            group_order: New group g is old group group_order[g]
            user_orders: user_orders[m] reorders the users of old group m

        Returns:
            Index array idx so that new column i is old column idx[i]
        """
        group_order = [int(m) for m in group_order]
        if sorted(group_order) != list(range(self.n_groups)):
            raise InvalidInstanceError(f"{group_order} is not a permutation of the groups")
        if len(user_orders) != self.n_groups:
            raise InvalidInstanceError(f"{len(user_orders)} user orders for {self.n_groups} groups")
        offsets = self.group_offsets
        blocks: List[np.ndarray] = []
        for m in group_order:
            order = np.asarray(user_orders[m], dtype=int)
            if sorted(order.tolist()) != list(range(self.group_sizes[m])):
                raise InvalidInstanceError(f"{order.tolist()} is not a permutation of group {m}")
            blocks.append(offsets[m] + order)
        return np.concatenate(blocks)

    def permuted(self, group_order: Sequence[int], user_orders: Sequence[Sequence[int]]) -> "ChannelInstance":
        """Apply a group permutation and per-group user permutations"""
        idx = self.column_permutation(group_order, user_orders)
        group_order = list(group_order)
        return ChannelInstance(
            h=self.h[:, idx],
            group_sizes=tuple(self.group_sizes[m] for m in group_order),
            sigma2=self.sigma2[idx],
            gamma_lin=self.gamma_lin[group_order],
            positions=None if self.positions is None else self.positions[idx],
        )

    def with_gamma_db(self, sinr_target_db) -> "ChannelInstance":
        """Same channels with new per-group SINR targets (a scalar applies to every group)"""
        targets = np.broadcast_to(np.asarray(sinr_target_db, dtype=np.float64), (self.n_groups,))
        return replace(self, gamma_lin=db_to_lin(targets))


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, sample index)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sample_instance(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelInstance:
    """
    Draw user positions and Rayleigh channels for one instance

    Args:
        cfg: Scenario setting
        rng: Stream for this instance, normally instance_rng(seed, index)

    Returns:
        Instance with users uniform in cfg.user_box at z=0, assigned to
        groups by index blocks
    """
    n, k = cfg.n_antennas, cfg.n_users
    x0, x1, y0, y1 = cfg.user_box
    positions = rng.uniform(low=(x0, y0), high=(x1, y1), size=(k, 2))
    bx, by, bz = cfg.bs_xyz
    distance = np.sqrt((positions[:, 0] - bx) ** 2 + (positions[:, 1] - by) ** 2 + bz**2)
    gain = 10.0 ** (-pathloss_db(distance) / 10.0)

    # CN(0, 1): re and im each N(0, 1/2)
    parts = rng.normal(loc=0.0, scale=np.sqrt(0.5), size=(2, n, k))
    g = parts[0] + 1j * parts[1]

    return ChannelInstance(
        h=np.sqrt(gain)[None, :] * g,
        group_sizes=cfg.group_sizes,
        sigma2=np.full(k, float(dbm_to_watt(cfg.noise_dbm))),
        gamma_lin=db_to_lin(cfg.sinr_target_db),
        positions=positions,
    )


def generate_instances(
    cfg: ScenarioConfig, count: int, seed: Optional[int] = None, start: int = 0
) -> List[ChannelInstance]:
    """
    Draw instances start .. start+count-1 of a seeded stream

    Args:
        cfg: Scenario setting
        count: Number of instances
        seed: Stream seed (defaults to cfg.seed)
        start: Global index of the first instance
    """
    seed = cfg.seed if seed is None else seed
    logger.debug(f"Sampling {count} instances from seed {seed} starting at index {start}")
    return [sample_instance(cfg, instance_rng(seed, start + i)) for i in range(count)]
