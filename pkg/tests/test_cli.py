"""Command-line interface: subcommands, flags, exit codes, determinism."""

import json

import pytest

from relaysec.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, cli_main


@pytest.fixture()
def small_cfg(tmp_path):
    doc = {
        "N": 4, "N_E": 1, "sigma2": 1e-3, "Q_tot": 1000.0, "P_T": 1500.0,
        "P_J1_bar": 1000.0, "Q_l": [500.0] * 4,
        "impairments": {k: 0.08 for k in
                        ("k_s_t", "k_J1_t", "k_J2_t", "k_D_r", "k_R_r", "k_R_t")},
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_no_subcommand_is_usage_error(capsys):
    assert cli_main([]) == EXIT_USAGE


def test_unknown_flag_is_usage_error():
    assert cli_main(["solve", "--bogus"]) == EXIT_USAGE


def test_solve_deterministic_output(small_cfg, tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli_main(["solve", "--config", small_cfg, "--seed", "7",
                     "--out", str(out1), "--quiet"]) == EXIT_OK
    assert cli_main(["solve", "--config", small_cfg, "--seed", "7",
                     "--out", str(out2), "--quiet"]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert doc["feasible"] is True
    assert doc["R_s"] >= 0.0


def test_sweep_empty_grid_exit_usage(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"param": "Q_tot", "values": [], "trials": 1}))
    assert cli_main(["sweep", "--config", str(spec), "--quiet"]) == EXIT_USAGE


def test_sweep_missing_config_exit_usage():
    assert cli_main(["sweep", "--quiet"]) == EXIT_USAGE


def test_sweep_writes_csv(tmp_path):
    base = {
        "N": 4, "N_E": 1, "sigma2": 1e-3, "Q_tot": 1000.0, "P_T": 1500.0,
        "P_J1_bar": 1000.0, "Q_l": [500.0] * 4,
    }
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(
        {"param": "Q_tot", "values": [1000.0], "trials": 1, "base": base}))
    out = tmp_path / "sweep.csv"
    code = cli_main(["sweep", "--config", str(spec), "--out", str(out),
                     "--quiet", "--seed", "3"])
    assert code == EXIT_OK
    header = out.read_text().splitlines()[0]
    assert header.startswith("param,value,mean_Rs")


def test_gen_data_requires_out():
    assert cli_main(["gen-data", "--trials", "1"]) == EXIT_USAGE


def test_gen_train_eval_pipeline(small_cfg, tmp_path):
    ds = tmp_path / "ds.jsonl"
    code = cli_main(["gen-data", "--config", small_cfg, "--seed", "1",
                     "--trials", "70", "--out", str(ds), "--quiet"])
    assert code == EXIT_OK
    assert len(ds.read_text().splitlines()) == 70

    train_cfg = tmp_path / "train.json"
    train_cfg.write_text(json.dumps({
        "dataset": str(ds), "epochs": 8, "batch_size": 16,
        "hidden": [16, 16], "val_fraction": 0.1,
    }))
    model = tmp_path / "model.json"
    assert cli_main(["train", "--config", str(train_cfg), "--seed", "2",
                     "--out", str(model), "--quiet"]) == EXIT_OK
    assert model.exists()

    eval_cfg = tmp_path / "eval.json"
    eval_cfg.write_text(json.dumps({"model": str(model), "dataset": str(ds)}))
    report_path = tmp_path / "report.json"
    assert cli_main(["eval", "--config", str(eval_cfg),
                     "--out", str(report_path)]) == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report["n_eval"] >= 1
    assert "relative_asr" in report


def test_train_missing_dataset_file(tmp_path):
    cfg = tmp_path / "train.json"
    cfg.write_text(json.dumps({"dataset": str(tmp_path / "missing.jsonl")}))
    code = cli_main(["train", "--config", str(cfg),
                     "--out", str(tmp_path / "m.json"), "--quiet"])
    assert code == EXIT_FAILURE


def test_oracle_small_instance(small_cfg, tmp_path):
    out = tmp_path / "oracle.json"
    code = cli_main(["oracle", "--config", small_cfg, "--seed", "4",
                     "--trials", "1", "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["trials"] == 1


def test_oracle_rejects_large_instance():
    assert cli_main(["oracle", "--trials", "1", "--quiet"]) == EXIT_USAGE
