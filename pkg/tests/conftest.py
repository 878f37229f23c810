"""Shared fixtures: random instances, tiny models, hierarchical permutations"""

import numpy as np
import pytest

from src.model import DecoderConfig, EncoderHyper, HPETransformer
from src.scenario import ChannelInstance, db_to_lin

TINY = EncoderHyper(d=8, n_layers=1, n_heads=2, d_ff=16)
SMALL = EncoderHyper(d=16, n_layers=2, n_heads=4, d_ff=32)


def random_instance(rng, n=4, group_sizes=(2, 1), gamma_db=10.0, sigma2=1.0) -> ChannelInstance:
    """CN(0,1) channels without path loss; gamma_db is a scalar or one value per group"""
    k = sum(group_sizes)
    h = (rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))) / np.sqrt(2.0)
    targets = np.broadcast_to(np.asarray(gamma_db, dtype=np.float64), (len(group_sizes),))
    return ChannelInstance(
        h=h,
        group_sizes=tuple(group_sizes),
        sigma2=np.full(k, sigma2),
        gamma_lin=db_to_lin(targets),
    )


def random_beamformer(rng, n, m, scale=1.0) -> np.ndarray:
    return scale * (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m)))


def random_hierarchical_permutation(rng, group_sizes):
    """(group_order, user_orders) with the user orders indexed by original group"""
    group_order = rng.permutation(len(group_sizes)).tolist()
    user_orders = [rng.permutation(k).tolist() for k in group_sizes]
    return group_order, user_orders


def relative_error(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model():
    return HPETransformer.create(TINY, n_antennas=2, decoder=DecoderConfig(eta=0.01, r_train=2, r_test=5), seed=7)


@pytest.fixture
def small_model():
    return HPETransformer.create(SMALL, n_antennas=8, decoder=DecoderConfig(eta=0.01, r_train=5, r_test=5), seed=3)
