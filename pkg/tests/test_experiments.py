import json
import math

import numpy as np
import pytest

from mdnre import experiments
from mdnre.exceptions import ConfigurationError
from mdnre.experiments import ExperimentConfig, load_config
from mdnre.io import save_dataset
from mdnre.training import train


def _strip_time(report):
    data = json.loads(report.to_json())
    data["metadata"].pop("timestamp")
    return json.dumps(data, sort_keys=True)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.preset == "bfs" and cfg.seed == 0 and cfg.mode == "first"

    def test_toml_and_overrides(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text('preset = "bfsl"\nseed = 4\nnoise_sigma = 0.01\n')
        cfg = load_config(path, seed=9, theta=None)
        assert (cfg.preset, cfg.seed, cfg.noise_sigma, cfg.theta) == ("bfsl", 9, 0.01, None)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text("colour = 3\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text("seed = = 3\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    @pytest.mark.parametrize("bad", [{"preset": "ferg"}, {"mode": "best"}, {"preset": "csv"},
                                     {"n_seeds": 0}])
    def test_invalid(self, bad):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**bad)

    def test_source_domain_aliases(self):
        assert ExperimentConfig(source_domain="all").source_domain is None
        assert ExperimentConfig(preset="fig3-collinear").source_domain == "source"


class TestTransfer:
    def test_bfs_noiseless(self):
        rep = experiments.run_transfer(ExperimentConfig())
        assert rep.overall_accuracy == 1.0
        assert rep.per_domain == {"human": 1.0, "monkey": 1.0, "cartoon": 1.0}
        assert rep.extras["n_training_images"] == 9
        base = rep.extras["baselines"]
        assert base["single_reference"]["overall"] < 1.0
        assert base["linear"]["monkey"] < 1.0 and base["linear"]["cartoon"] < 1.0

    def test_fig3_collinear(self):
        rep = experiments.run_transfer(ExperimentConfig(preset="fig3-collinear"))
        assert rep.overall_accuracy == 1.0
        base = rep.extras["baselines"]
        assert base["linear"]["target"] == 0.0
        assert base["single_reference"]["target"] < 1.0

    def test_missing_neutral(self, tmp_path, bfs):
        path = tmp_path / "no_monkey_neutral.csv"
        save_dataset(bfs.subset(~((bfs.domains == "monkey") & (bfs.labels == "neutral"))), path)
        with pytest.raises(ConfigurationError):
            experiments.run_transfer(ExperimentConfig(preset="csv", data=str(path)))

    def test_deterministic(self):
        cfg = ExperimentConfig(seed=5, noise_sigma=0.03, identity_sigma=0.05)
        assert _strip_time(experiments.run_transfer(cfg)) == _strip_time(
            experiments.run_transfer(cfg))


class TestStrength:
    def test_noiseless_linearity(self):
        rep = experiments.run_strength(ExperimentConfig(preset="bfsl"))
        assert rep.overall_accuracy == 1.0
        assert rep.per_strength["0"] == 1.0  # zero blend reads as neutral
        for stats in rep.linearity.values():
            assert stats["slope"] == pytest.approx(1.0, abs=1e-9)
            assert stats["intercept"] == pytest.approx(0.0, abs=1e-9)
            assert stats["r2"] == pytest.approx(1.0, abs=1e-9)

    def test_seed_sweep(self):
        rep = experiments.run_strength(ExperimentConfig(preset="bfsl", noise_sigma=0.02,
                                                        n_seeds=3))
        sweep = rep.extras["seed_sweep"]
        assert sweep["n_seeds"] == 3
        assert set(sweep["mean_accuracy"]) == {"0", "0.25", "0.5", "0.75", "1"}


class TestOcclusion:
    def test_sweep_endpoints(self):
        rep = experiments.run_occlusion(ExperimentConfig())
        table = rep.extras["occlusion"]
        assert [row["k"] for row in table] == list(range(8))
        assert table[0]["mean_accuracy"] == rep.overall_accuracy == 1.0
        assert all(row["exhaustive"] for row in table)
        assert table[3]["n_masks"] == math.comb(7, 3)

    def test_all_masked_is_neutral(self, bfs_pool, bfs):
        model, _ = train(bfs_pool, source_domain="human")
        pred = model.predict(bfs.X, mask=experiments.expressive_landmarks(10, (0, 1, 2)))
        assert np.all(pred == "neutral")

    def test_masks_of_size(self):
        rng = np.random.default_rng(0)
        masks, exhaustive = experiments.masks_of_size(list(range(7)), 2, rng)
        assert exhaustive and len(masks) == 21
        masks, exhaustive = experiments.masks_of_size(list(range(20)), 10, rng, n_random=30)
        assert not exhaustive and len(masks) == 30 == len(set(masks))

    def test_single_mask_size(self):
        rep = experiments.run_occlusion(ExperimentConfig(mask_k=2))
        assert [row["k"] for row in rep.extras["occlusion"]] == [2]


class TestOptimize:
    def test_corrupted(self):
        rep = experiments.run_optimize(ExperimentConfig(preset="corrupted", mode="optimized"))
        t = rep.extras["templates"]
        assert t["optimized"]["train_accuracy"] > t["first"]["train_accuracy"]
        assert all(v.endswith("clean") for v in t["optimized"]["exemplars"].values())
        assert rep.overall_accuracy == t["optimized"]["test_accuracy"]

    def test_single_candidate_equal(self):
        rep = experiments.run_optimize(ExperimentConfig(preset="fig3-collinear"))
        t = rep.extras["templates"]
        assert t["optimized"]["train_accuracy"] == t["first"]["train_accuracy"]

    def test_noisy_never_worse(self):
        rep = experiments.run_optimize(ExperimentConfig(noise_sigma=0.05, identity_sigma=0.05))
        t = rep.extras["templates"]
        assert t["optimized"]["train_accuracy"] >= t["first"]["train_accuracy"]


def test_make_dataset_streams_differ():
    cfg = ExperimentConfig(noise_sigma=0.01)
    a = experiments.make_dataset(cfg, 0)
    b = experiments.make_dataset(cfg, 1)
    assert not np.array_equal(a.X, b.X)


def test_train_test_split_disjoint():
    pool, test = experiments.train_test_split(ExperimentConfig())
    assert len(pool) == 9 and len(test) == 96
    assert not set(pool.sample_ids) & set(test.sample_ids)
