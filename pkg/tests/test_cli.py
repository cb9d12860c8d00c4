import json

from fedsim.cli import main

SMALL = {
    "protocols": ["fedavg"],
    "seeds": [1],
    "m": 8,
    "m_prime": 3,
    "T": 5,
    "num_samples": 200,
    "input_dim": 6,
    "num_classes": 3,
    "local_epochs": 3,
    "batch_size": 16,
    "targets": [0.5],
}


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_run_writes_outputs_and_prints_summary(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--config", write_config(tmp_path, SMALL), "--out", str(out), "--csv"])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["unit"] == "simulated seconds"
    assert len(printed["rows"]) == 1
    assert (out / "fedavg-seed1.jsonl").exists()
    assert (out / "summary.csv").exists()


def test_run_with_overrides(tmp_path, capsys):
    code = main(
        [
            "run",
            "--config",
            write_config(tmp_path, SMALL),
            "--protocol",
            "fedasync",
            "--seeds",
            "3,4",
        ]
    )
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert [(r["protocol"], r["seed"]) for r in printed["rows"]] == [
        ("fedasync", 3),
        ("fedasync", 4),
    ]


def test_config_error_exit_code(tmp_path, capsys):
    code = main(["run", "--config", write_config(tmp_path, {"m": 2, "m_prime": 5})])
    assert code == 1
    assert "m_prime" in capsys.readouterr().err


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "desk-default" in out and "table3-lenet-fmnist" in out


def test_selftest_fast(capsys):
    assert main(["selftest", "--fast"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
