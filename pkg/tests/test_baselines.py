import numpy as np
import pytest

from conftest import TINY, random_hierarchical_permutation, random_instance
from src.baselines import CcpConfig, VanillaTransformer, ccp_solve, zf_init
from src.baselines.ccp import _Subproblem
from src.baselines.zero_forcing import bisect_scale
from src.errors import ConfigError
from src.model import DecoderConfig, HPETransformer, constraint_step
from src.qos import cv, is_feasible, mrt_oracle, sinr_values, total_power
from src.scenario import ChannelInstance, ScenarioConfig, generate_instances


class TestZeroForcing:
    def test_single_group(self, rng):
        inst = random_instance(rng, n=4, group_sizes=(3,), gamma_db=10.0)
        result = zf_init(inst)
        assert result.feasible and not result.used_fallback
        assert cv(inst, result.W).item() == 0.0
        # the weakest user sits exactly at its target up to bisection accuracy
        assert np.min(sinr_values(inst, result.W)) == pytest.approx(10.0, rel=1e-9)

    def test_orthogonal_groups(self):
        h = np.zeros((4, 3), dtype=complex)
        h[0, 0], h[2, 2] = 1.0, 0.5
        h[:2, 1] = [0.5, 1j]
        inst = ChannelInstance(h=h, group_sizes=(2, 1), sigma2=np.ones(3), gamma_lin=[4.0, 2.0])
        result = zf_init(inst)
        assert result.feasible and not result.used_fallback
        np.testing.assert_allclose(np.abs(result.W[3]), 0.0, atol=1e-12)
        # group 1 is a single user: power γσ²/|h|²
        assert np.sum(np.abs(result.W[:, 1]) ** 2) == pytest.approx(2.0 / 0.25, rel=1e-9)
        assert np.abs(np.vdot(h[:, 2], result.W[:, 0])) <= 1e-12

    def test_random_multigroup_meets_every_target(self, rng):
        inst = random_instance(rng, n=16, group_sizes=(2, 2, 2), gamma_db=10.0)
        result = zf_init(inst)
        assert result.feasible and not result.used_fallback
        assert cv(inst, result.W).item() == 0.0
        for m in range(3):
            others = np.delete(np.arange(6), inst.group_offsets[m] + np.arange(2))
            np.testing.assert_allclose(inst.h[:, others].conj().T @ result.W[:, m], 0.0, atol=1e-9)

    def test_physical_units(self):
        cfg = ScenarioConfig(n_antennas=8, group_sizes=(2, 2))
        inst = generate_instances(cfg, 1, seed=3)[0]
        result = zf_init(inst)
        assert result.feasible
        assert result.power == pytest.approx(total_power(result.W).item(), rel=1e-12)

    def test_empty_nullspace_uses_fallback(self, rng):
        inst = random_instance(rng, n=2, group_sizes=(2, 2), gamma_db=0.0)
        result = zf_init(inst)
        assert result.used_fallback
        assert result.W.shape == (2, 2)
        assert result.feasible == is_feasible(inst, result.W)

    def test_bisection(self):
        assert bisect_scale(lambda t: t >= 3.0, guess=1.0) == pytest.approx(3.0, rel=1e-12)
        assert bisect_scale(lambda t: t >= 3.0, guess=100.0) == pytest.approx(3.0, rel=1e-12)
        assert bisect_scale(lambda t: False, guess=1.0) == 1e12


class TestCcp:
    def test_linearization_is_tight_and_conservative(self, rng):
        inst = random_instance(rng, n=4, group_sizes=(2, 1), gamma_db=6.0)
        X_bar = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        sub = _Subproblem(inst.h, inst.group_onehot, inst.gamma_users, X_bar, margin=0.0)

        P = np.abs(inst.h.conj().T @ X_bar) ** 2
        signal = np.sum(P * inst.group_onehot, axis=1)
        exact = P.sum(axis=1) - signal + 1.0 - signal / inst.gamma_users
        np.testing.assert_allclose(sub.constraints(X_bar)[0], exact, rtol=1e-12)

        for _ in range(10):
            X = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
            P = np.abs(inst.h.conj().T @ X) ** 2
            signal = np.sum(P * inst.group_onehot, axis=1)
            true_g = P.sum(axis=1) - signal + 1.0 - signal / inst.gamma_users
            assert np.all(sub.constraints(X)[0] >= true_g - 1e-12)

    def test_single_user_reaches_closed_form(self, rng):
        for draw in range(100):
            inst = random_instance(rng, n=8, group_sizes=(1,), gamma_db=float(rng.uniform(0.0, 20.0)))
            result = ccp_solve(inst, zf_init(inst).W)
            _, optimum = mrt_oracle(inst)
            assert result.power == pytest.approx(optimum, rel=1e-4), draw

    @pytest.mark.slow
    def test_single_group_of_four(self):
        cfg = ScenarioConfig(n_antennas=8, group_sizes=(4,), sinr_target_db=(10.0,))
        passed = 0
        for inst in generate_instances(cfg, 200, seed=11):
            zf = zf_init(inst)
            result = ccp_solve(inst, zf.W)
            passed += cv(inst, result.W).item() <= 1e-3 and result.power <= zf.power * (1.0 + 1e-9)
        assert passed >= 190

    def test_improves_on_zero_forcing(self, rng):
        inst = random_instance(rng, n=8, group_sizes=(2, 2), gamma_db=10.0)
        zf = zf_init(inst)
        result = ccp_solve(inst, zf.W)
        assert result.feasible_trace[0]
        assert cv(inst, result.W).item() <= 1e-3
        assert result.power <= zf.power * (1.0 + 1e-9)

    def test_power_trace_never_increases(self, rng):
        inst = random_instance(rng, n=6, group_sizes=(2, 1, 1), gamma_db=8.0)
        result = ccp_solve(inst, zf_init(inst).W, CcpConfig(max_outer=5))
        trace = np.asarray(result.power_trace)
        assert np.all(np.diff(trace) <= 1e-12 * trace[:-1])
        assert all(result.feasible_trace)
        assert result.iterations == len(trace) - 1

    def test_physical_scale_instance(self):
        cfg = ScenarioConfig(n_antennas=8, group_sizes=(2, 2), sinr_target_db=(10.0,))
        inst = generate_instances(cfg, 1, seed=5)[0]
        zf = zf_init(inst)
        result = ccp_solve(inst, zf.W)
        assert cv(inst, result.W).item() <= 1e-3
        assert result.power <= zf.power * (1.0 + 1e-9)

    def test_infeasible_start_is_reported(self, rng):
        inst = random_instance(rng, n=4, group_sizes=(1, 1))
        result = ccp_solve(inst, np.zeros((4, 2)), CcpConfig(max_outer=2, inner_max_iter=3))
        assert not result.feasible_trace[0]
        assert not result.converged
        assert result.warning is not None
        assert result.W.shape == (4, 2)

    @pytest.mark.parametrize("kwargs", [{"max_outer": 0}, {"margin": 0.0}, {"penalty_growth": 1.0}, {"outer_tol": -1.0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigError):
            CcpConfig(**kwargs)


def vanilla_model(seed=0, r_train=0):
    return VanillaTransformer.create(TINY, n_antennas=4, decoder=DecoderConfig(eta=0.01, r_train=r_train, r_test=2), seed=seed)


class TestVanillaTransformer:
    def test_shapes(self, rng):
        model = vanilla_model()
        assert model.parameter_count() == model.params.size
        assert "out.weight" in model.params.names() and "layer0.u1.head0.wq" not in model.params.names()
        inst = random_instance(rng, n=4, group_sizes=(2, 3, 1))
        assert model.infer(inst).shape == (4, 3)

    def test_hierarchical_permutation(self, rng):
        model = vanilla_model(seed=1)
        inst = random_instance(rng, n=4, group_sizes=(2, 3, 1))
        W = model.infer(inst, r=1)
        group_order, user_orders = random_hierarchical_permutation(rng, inst.group_sizes)
        W_perm = model.infer(inst.permuted(group_order, user_orders), r=1)
        np.testing.assert_allclose(W_perm, W[:, group_order], rtol=0, atol=1e-9)

    def test_constraint_steps_follow_output_layer(self, rng):
        model = vanilla_model(seed=2)
        inst = random_instance(rng, n=4, group_sizes=(1, 1)).normalized()
        params = model.bind()
        W = model.forward(inst, params, 0)
        W = constraint_step(inst, constraint_step(inst, W, 0.01), 0.01)
        assert np.array_equal(model.forward(inst, params, 2).numpy(), W.numpy())

    def test_regrouping_changes_both_models(self, rng):
        inst = random_instance(rng, n=4, group_sizes=(2, 2))
        regrouped = ChannelInstance(h=inst.h, group_sizes=(1, 3), sigma2=inst.sigma2, gamma_lin=inst.gamma_lin)
        hpe = HPETransformer.create(TINY, n_antennas=4, decoder=DecoderConfig(eta=0.01, r_train=0, r_test=0), seed=1)
        for model in (vanilla_model(seed=1), hpe):
            assert np.max(np.abs(model.infer(inst, r=0) - model.infer(regrouped, r=0))) > 1e-6
