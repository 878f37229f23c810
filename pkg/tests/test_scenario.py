import json

import numpy as np
import pytest

from conftest import random_instance
from src.errors import ConfigError, DatasetError, InvalidInstanceError
from src.scenario import (
    BinaryDatasetCodec,
    ChannelInstance,
    ScenarioConfig,
    TextDatasetCodec,
    codec_for,
    db_to_lin,
    dbm_to_watt,
    generate_instances,
    instance_rng,
    pathloss_db,
    read_dataset,
    sample_instance,
    watt_to_dbm,
    write_dataset,
)


class TestUnits:
    def test_pathloss(self):
        assert pathloss_db(10.0) == pytest.approx(69.3, abs=1e-12)
        assert pathloss_db(100.0) == pytest.approx(106.0, abs=1e-12)
        distance = np.sqrt(85.0**2 + 85.0**2 + 20.0**2)
        assert distance == pytest.approx(121.86, abs=5e-3)
        assert pathloss_db(distance) == pytest.approx(32.6 + 36.7 * np.log10(distance), abs=1e-12)
        assert pathloss_db(distance) == pytest.approx(109.15, abs=5e-3)

    def test_pathloss_rejects_nonpositive_distance(self):
        with pytest.raises(InvalidInstanceError):
            pathloss_db(0.0)

    def test_power_conversions(self):
        assert dbm_to_watt(-100.0) == pytest.approx(1e-13, rel=1e-12)
        assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-12)
        assert watt_to_dbm(1e-3) == pytest.approx(0.0, abs=1e-12)
        assert db_to_lin(10.0) == pytest.approx(10.0, rel=1e-12)


class TestScenarioConfig:
    def test_targets_broadcast_to_groups(self):
        cfg = ScenarioConfig(group_sizes=(2, 3, 1), sinr_target_db=(8.0,))
        assert cfg.sinr_target_db == (8.0, 8.0, 8.0)
        assert cfg.n_groups == 3 and cfg.n_users == 6

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_antennas": 0},
            {"group_sizes": ()},
            {"group_sizes": (2, 0)},
            {"group_sizes": (2, 2), "sinr_target_db": (1.0, 2.0, 3.0)},
            {"user_box": (95.0, 85.0, 85.0, 115.0)},
            {"seed": -1},
        ],
    )
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kwargs)

    def test_with_groups(self):
        cfg = ScenarioConfig(group_sizes=(4,), sinr_target_db=(10.0,)).with_groups([2, 2, 2])
        assert cfg.group_sizes == (2, 2, 2)
        assert cfg.sinr_target_db == (10.0, 10.0, 10.0)


class TestSampling:
    def test_same_key_is_bit_identical(self):
        cfg = ScenarioConfig(n_antennas=4, group_sizes=(2, 3))
        a = sample_instance(cfg, instance_rng(5, 17))
        b = sample_instance(cfg, instance_rng(5, 17))
        assert np.array_equal(a.h, b.h)
        assert np.array_equal(a.positions, b.positions)
        c = sample_instance(cfg, instance_rng(5, 18))
        assert not np.array_equal(a.h, c.h)

    def test_generation_is_keyed_by_index(self):
        cfg = ScenarioConfig(n_antennas=4, group_sizes=(2, 2), seed=3)
        batch = generate_instances(cfg, 10)
        tail = generate_instances(cfg, 3, start=7)
        assert np.array_equal(batch[7].h, tail[0].h)
        assert np.array_equal(batch[7].h, sample_instance(cfg, instance_rng(3, 7)).h)

    def test_layout_units_and_positions(self):
        cfg = ScenarioConfig(n_antennas=8, group_sizes=(3, 1), sinr_target_db=(10.0, 6.0), noise_dbm=-100.0)
        inst = generate_instances(cfg, 1, seed=9)[0]
        assert inst.h.shape == (8, 4)
        assert inst.group_sizes == (3, 1)
        np.testing.assert_allclose(inst.sigma2, 1e-13)
        np.testing.assert_allclose(inst.gamma_lin, [10.0, 10.0**0.6])
        x, y = inst.positions[:, 0], inst.positions[:, 1]
        assert np.all((85.0 <= x) & (x <= 95.0)) and np.all((85.0 <= y) & (y <= 115.0))

    @pytest.fixture(scope="class")
    def fading_draws(self):
        """(|h|², path gain) for 500 instances of 25 users on 8 antennas: 10⁵ channel entries"""
        cfg = ScenarioConfig(n_antennas=8, group_sizes=(25,))
        energy, gains = [], []
        for inst in generate_instances(cfg, 500, seed=1):
            distance = np.sqrt(inst.positions[:, 0] ** 2 + inst.positions[:, 1] ** 2 + 20.0**2)
            gains.append(10.0 ** (-pathloss_db(distance) / 10.0))
            energy.append(np.abs(inst.h) ** 2)
        return np.stack(energy), np.stack(gains)

    def test_rayleigh_second_moment(self, fading_draws):
        energy, gains = fading_draws
        assert energy.size == 100_000
        assert np.mean(energy / gains[:, None, :]) == pytest.approx(1.0, abs=0.02)

    def test_path_gain_scales_channel_energy(self, fading_draws):
        energy, gains = fading_draws
        # E‖h_k‖² = N·10^(−PL/10)
        assert np.sum(energy) / np.sum(8 * gains) == pytest.approx(1.0, rel=0.03)


class TestChannelInstance:
    def test_invariants(self, rng):
        h = np.ones((2, 3), dtype=complex)
        with pytest.raises(InvalidInstanceError):
            ChannelInstance(h=h, group_sizes=(2,), sigma2=np.ones(3), gamma_lin=[1.0])
        with pytest.raises(InvalidInstanceError):
            ChannelInstance(h=h, group_sizes=(3,), sigma2=np.zeros(3), gamma_lin=[1.0])
        with pytest.raises(InvalidInstanceError):
            ChannelInstance(h=h * np.nan, group_sizes=(3,), sigma2=np.ones(3), gamma_lin=[1.0])

    def test_normalized(self, rng):
        inst = random_instance(rng, n=3, group_sizes=(2, 2), sigma2=4.0)
        norm = inst.normalized()
        np.testing.assert_allclose(norm.sigma2, 1.0)
        np.testing.assert_allclose(norm.h, inst.h / 2.0)

    def test_offsets_and_onehot(self, rng):
        inst = random_instance(rng, group_sizes=(2, 3, 1))
        np.testing.assert_array_equal(inst.group_offsets, [0, 2, 5, 6])
        np.testing.assert_array_equal(inst.user_groups, [0, 0, 1, 1, 1, 2])
        np.testing.assert_array_equal(inst.group_onehot.sum(axis=0), [2, 3, 1])

    def test_permuted(self, rng):
        inst = random_instance(rng, group_sizes=(2, 3), gamma_db=[6.0, 12.0])
        perm = inst.permuted([1, 0], [[1, 0], [2, 0, 1]])
        assert perm.group_sizes == (3, 2)
        np.testing.assert_array_equal(perm.h, inst.h[:, [4, 2, 3, 1, 0]])
        np.testing.assert_array_equal(perm.gamma_lin, inst.gamma_lin[[1, 0]])

    def test_rejects_non_permutation(self, rng):
        inst = random_instance(rng, group_sizes=(2, 2))
        with pytest.raises(InvalidInstanceError):
            inst.permuted([0, 0], [[0, 1], [0, 1]])
        with pytest.raises(InvalidInstanceError):
            inst.permuted([0, 1], [[0, 0], [0, 1]])

    def test_with_gamma_db(self, rng):
        inst = random_instance(rng, group_sizes=(1, 1))
        np.testing.assert_allclose(inst.with_gamma_db(6.0).gamma_db, [6.0, 6.0])


class TestDatasets:
    def instances(self):
        cfg = ScenarioConfig(n_antennas=4, group_sizes=(2, 1), sinr_target_db=(10.0, 8.0))
        return generate_instances(cfg, 5, seed=2)

    @pytest.mark.parametrize("name", ["data.jsonl", "data.bin"])
    def test_round_trip(self, tmp_path, name):
        original = self.instances()
        path = tmp_path / name
        assert write_dataset(path, original) == 5
        loaded = read_dataset(path)
        assert len(loaded) == 5
        for a, b in zip(original, loaded):
            np.testing.assert_array_equal(a.h, b.h)
            assert a.group_sizes == b.group_sizes
            np.testing.assert_allclose(b.sigma2, a.sigma2, rtol=1e-12)
            np.testing.assert_allclose(b.gamma_lin, a.gamma_lin, rtol=1e-12)

    def test_codec_by_suffix(self):
        assert isinstance(codec_for("x.bin"), BinaryDatasetCodec)
        assert isinstance(codec_for("x.jsonl"), TextDatasetCodec)

    def test_text_line_fields(self, tmp_path):
        path = tmp_path / "data.txt"
        write_dataset(path, self.instances()[:1])
        record = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert record["n"] == 4
        assert record["noise_dbm"] == pytest.approx(-100.0)
        assert [len(users) for users in record["groups"]] == [2, 1]
        assert len(record["groups"][0][0]) == 4

    def test_identical_files_for_identical_arguments(self, tmp_path):
        write_dataset(tmp_path / "a.bin", self.instances())
        write_dataset(tmp_path / "b.bin", self.instances())
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_truncated_binary(self, tmp_path):
        path = tmp_path / "data.bin"
        write_dataset(path, self.instances())
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(DatasetError):
            read_dataset(path)

    def test_malformed_text(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text('{"n": 2, "gamma_db": [10], "noise_dbm": -100, "groups": [[[[1, 0]]]]}\n', encoding="utf-8")
        with pytest.raises(DatasetError):
            read_dataset(path)
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(DatasetError):
            read_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            read_dataset(tmp_path / "missing.bin")
