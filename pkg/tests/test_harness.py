import json
import os

import numpy as np
import pytest

from fedsim.errors import ConfigError
from fedsim.harness import (
    ExperimentConfig,
    centralized_ceiling,
    config_from_dict,
    config_to_dict,
    parse_config,
    run_experiment,
    summary_csv,
    time_to_target,
)
from fedsim.presets import get_preset, preset_names

SMALL = dict(
    protocols=["fedasmu", "fedavg"],
    seeds=[1, 2],
    m=8,
    m_prime=3,
    T=10,
    num_samples=200,
    input_dim=6,
    num_classes=3,
    local_epochs=3,
    batch_size=16,
    targets=[0.5],
)


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestParseConfig:
    def test_minimal_config_fills_defaults(self, tmp_path):
        config = parse_config(write_config(tmp_path, {}))
        assert config == ExperimentConfig()
        assert config.m == 20 and config.m_prime == 5 and config.T == 200

    def test_m_prime_exceeding_m_named_in_error(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            parse_config(write_config(tmp_path, {"m": 5, "m_prime": 10}))
        assert any("m_prime" in p for p in err.value.problems)

    def test_all_problems_reported_at_once(self, tmp_path):
        doc = {"m": 5, "m_prime": 10, "tau": 0, "local_epochs": 1, "bogus_key": 1}
        with pytest.raises(ConfigError) as err:
            parse_config(write_config(tmp_path, doc))
        text = " ".join(err.value.problems)
        for needle in ("m_prime", "tau", "local_epochs", "bogus_key"):
            assert needle in text

    def test_protocol_alias(self, tmp_path):
        config = parse_config(write_config(tmp_path, {"protocol": "fedavg"}))
        assert config.protocols == ("fedavg",)

    def test_slot_override_aliases(self, tmp_path):
        config = parse_config(
            write_config(tmp_path, {"slot_override": "penultimate", "local_epochs": 6})
        )
        assert config.slot_override == 5
        config = parse_config(write_config(tmp_path, {"slot_override": "mid", "local_epochs": 6}))
        assert config.slot_override == 3

    def test_not_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            parse_config(str(path))

    def test_round_trip(self, tmp_path):
        config = config_from_dict(SMALL)
        again = config_from_dict(config_to_dict(config))
        assert again == config


class TestPresets:
    def test_table3_lenet_fmnist_values(self, tmp_path):
        config = parse_config(write_config(tmp_path, {"preset": "table3-lenet-fmnist"}))
        assert config.tau == 99
        assert config.trigger_period == 10.0
        assert config.m_prime == 10
        assert config.eta_i == 0.005

    def test_all_table3_presets_echo_reference_values(self):
        # (eta_lambda, eta_sigma, eta_iota, eta_gamma, eta_upsilon, eta_i)
        expected = {
            "table3-lenet-fmnist": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.005),
            "table3-lenet-cifar10": (0.001, 0.001, 0.1, 0.1, 0.001, 0.03),
            "table3-lenet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-cnn-cifar10": (0.001, 0.001, 0.0001, 0.1, 0.001, 0.028),
            "table3-cnn-cifar100": (0.00001, 0.00001, 0.00001, 0.00001, 0.00001, 0.013),
            "table3-resnet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-resnet-tinyimagenet": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-alexnet-cifar10": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-alexnet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-vgg-cifar10": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-vgg-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
            "table3-textcnn-imdb": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.001),
        }
        assert set(expected) <= set(preset_names())
        for name, rates in expected.items():
            config = config_from_dict({"preset": name})
            assert (config.m, config.m_prime, config.T, config.tau) == (100, 10, 500, 99)
            assert config.trigger_period == 10.0
            assert config.eta_rl == 0.001
            got = (
                config.eta_lambda,
                config.eta_sigma,
                config.eta_iota,
                config.eta_gamma,
                config.eta_upsilon,
                config.eta_i,
            )
            assert got == rates, name

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError):
            get_preset("table3-transformer-imagenet")

    def test_preset_overridable(self):
        config = config_from_dict({"preset": "table3-lenet-fmnist", "m": 30, "m_prime": 4})
        assert config.m == 30 and config.m_prime == 4
        assert config.eta_i == 0.005


class TestTimeToTarget:
    def test_first_crossing(self):
        log = [
            {"sim_time": 1.0, "eval_acc": 0.5},
            {"sim_time": 2.0, "eval_acc": 0.8},
        ]
        assert time_to_target(log, 0.7) == 2.0

    def test_absent_when_never_reached(self):
        log = [{"sim_time": 1.0, "eval_acc": 0.8}]
        assert time_to_target(log, 0.9) is None

    def test_non_monotone_uses_first_crossing(self):
        log = [
            {"sim_time": 1.0, "eval_acc": 0.8},
            {"sim_time": 2.0, "eval_acc": 0.6},
            {"sim_time": 3.0, "eval_acc": 0.9},
        ]
        assert time_to_target(log, 0.7) == 1.0


class TestRunExperiment:
    def test_cardinality_and_files(self, tmp_path):
        config = config_from_dict(SMALL)
        out = tmp_path / "out"
        rows = run_experiment(config, out_dir=str(out), write_csv=True)
        assert len(rows) == 4  # 2 protocols x 2 seeds
        for protocol in ("fedasmu", "fedavg"):
            for seed in (1, 2):
                assert (out / f"{protocol}-seed{seed}.jsonl").exists()
        assert (out / "summary.json").exists()
        assert (out / "summary.csv").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        config = config_from_dict(SMALL)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run_experiment(config, out_dir=str(out_a), write_csv=True)
        run_experiment(config, out_dir=str(out_b), write_csv=True)
        for name in sorted(os.listdir(out_a)):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_unreached_target_absent(self, tmp_path):
        config = config_from_dict({**SMALL, "targets": [0.999]})
        rows = run_experiment(config)
        assert all(r.time_to_target["0.999"] is None for r in rows)

    def test_summary_recomputable_from_logs(self, tmp_path):
        config = config_from_dict(SMALL)
        out = tmp_path / "out"
        rows = run_experiment(config, out_dir=str(out))
        for row in rows:
            records = [
                json.loads(line)
                for line in (out / f"{row.protocol}-seed{row.seed}.jsonl").read_text().splitlines()
            ]
            assert records[-1]["eval_acc"] == row.final_acc
            for target in config.targets:
                assert time_to_target(records, target) == row.time_to_target[str(target)]

    def test_csv_shape(self):
        config = config_from_dict(SMALL)
        rows = run_experiment(config)
        text = summary_csv(rows, config.targets)
        lines = text.strip().splitlines()
        assert lines[0] == "protocol,seed,final_acc,ttt_0.5"
        assert len(lines) == 5

    def test_archive_data(self, tmp_path):
        config = config_from_dict({**SMALL, "seeds": [1], "protocols": ["fedavg"]})
        out = tmp_path / "out"
        run_experiment(config, out_dir=str(out), archive_data=True)
        doc = json.loads((out / "dataset-seed1.json").read_text())
        assert len(doc["train"]["labels"]) + len(doc["test"]["labels"]) == 200


class TestCentralizedCeiling:
    def test_ceiling_beats_chance_and_is_deterministic(self):
        config = config_from_dict({**SMALL, "protocols": ["fedavg"]})
        a = centralized_ceiling(config, seed=1, passes=10)
        b = centralized_ceiling(config, seed=1, passes=10)
        assert a == b
        assert a > 1.0 / config.num_classes
