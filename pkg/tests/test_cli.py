"""End-to-end command-line flows on a small CSV dataset."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from tmxbar.cli import main
from tmxbar.config import load_toml
from tmxbar.device import DeviceConfig
from tmxbar.model_io import load_model


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def csv_data(tmp_path):
    rng = np.random.default_rng(0)
    feats = rng.random((80, 4)) < 0.5
    labels = (feats[:, 0] ^ feats[:, 1]).astype(int)
    lines = ["f0,f1,f2,f3,label"]
    lines += [
        ",".join(str(int(v)) for v in row) + f",{y}"
        for row, y in zip(feats, labels)
    ]
    path = tmp_path / "toy.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def train_args(csv_data, out, epochs=20):
    return [
        "train", "--dataset", str(csv_data), "--clauses", "16", "--t", "8",
        "--s", "3.0", "--epochs", str(epochs), "--seed", "0",
        "--out", str(out),
    ]


@pytest.fixture
def trained(runner, csv_data, tmp_path):
    out = tmp_path / "model.txt"
    result = runner.invoke(main, train_args(csv_data, out))
    assert result.exit_code == 0, result.output
    return out


def test_train_writes_model_and_log(runner, csv_data, tmp_path):
    out = tmp_path / "m.txt"
    result = runner.invoke(main, train_args(csv_data, out))
    assert result.exit_code == 0, result.output
    assert "model written to" in result.output
    model = load_model(out)
    assert model.n_clauses == 16
    log = json.loads((tmp_path / "m.txt.log.json").read_text())
    assert log["command"] == "train"
    assert log["resolved"]["clauses"] == 16
    assert len(log["history"]["train_accuracy"]) == 20
    assert str(csv_data) in log["inputs"]


def test_train_is_reproducible(runner, csv_data, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    r1 = runner.invoke(main, train_args(csv_data, a))
    r2 = runner.invoke(main, train_args(csv_data, b))
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_dataset_is_usage_error(runner, tmp_path):
    result = runner.invoke(
        main, ["train", "--dataset", str(tmp_path / "nope"), "--out",
               str(tmp_path / "m.txt")],
    )
    assert result.exit_code == 2
    assert "--dataset" in result.stderr


def test_malformed_csv_is_data_error(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,label\n2,0\n")
    result = runner.invoke(
        main, ["train", "--dataset", str(bad), "--out", str(tmp_path / "m.txt")]
    )
    assert result.exit_code == 3


def test_config_file_layering(runner, csv_data, tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text(
        f'[train]\ndataset = "{csv_data}"\nclauses = 12\nt = 6\n'
        's = 3.0\nepochs = 2\nseed = 0\n'
    )
    out = tmp_path / "m.txt"
    result = runner.invoke(
        main, ["--config", str(cfg), "train", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert load_model(out).n_clauses == 12
    # flags override the file
    result = runner.invoke(
        main, ["--config", str(cfg), "train", "--out", str(out), "--clauses", "8"]
    )
    assert result.exit_code == 0
    assert load_model(out).n_clauses == 8


def test_unknown_config_key_is_usage_error(runner, csv_data, tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text("[train]\nbogus = 1\n")
    result = runner.invoke(
        main,
        ["--config", str(cfg), "train", "--dataset", str(csv_data),
         "--out", str(tmp_path / "m.txt")],
    )
    assert result.exit_code == 2
    assert "bogus" in result.stderr


def test_corrupted_model_is_usage_error(runner, tmp_path):
    bad = tmp_path / "model.txt"
    bad.write_text("not a model\n")
    result = runner.invoke(
        main, ["map", "--model", str(bad), "--out", str(tmp_path / "mapped")]
    )
    assert result.exit_code == 2


def test_map_exact_then_infer_matches_golden(runner, csv_data, trained, tmp_path):
    mapped = tmp_path / "mapped"
    result = runner.invoke(
        main, ["map", "--model", str(trained), "--out", str(mapped), "--exact"]
    )
    assert result.exit_code == 0, result.output
    assert (mapped / "system.json").is_file()
    report = tmp_path / "infer.json"
    result = runner.invoke(main, [
        "infer", "--tiles", str(mapped), "--model", str(trained),
        "--dataset", str(csv_data), "--report", str(report),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(report.read_text())
    assert payload["agreement_with_golden"] == 1.0
    assert payload["analog_accuracy"] == payload["golden_accuracy"]
    assert payload["clause_pj_per_datapoint"] > 0


def test_map_tuned_reports_stages(runner, trained, tmp_path):
    mapped = tmp_path / "mapped"
    result = runner.invoke(
        main, ["map", "--model", str(trained), "--out", str(mapped)]
    )
    assert result.exit_code == 0, result.output
    rep = json.loads((mapped / "map_report.json").read_text())
    assert {"encode", "pretune", "finetune"} <= set(rep["reports"])
    hist = (mapped / "pulse_histograms.csv").read_text().splitlines()
    assert hist[0] == "stage,kind,pulses,cells"
    assert any(line.startswith("encode,program,") for line in hist[1:])


def test_map_skip_finetune(runner, trained, tmp_path):
    mapped = tmp_path / "mapped"
    result = runner.invoke(
        main,
        ["map", "--model", str(trained), "--out", str(mapped), "--skip-finetune"],
    )
    assert result.exit_code == 0, result.output
    rep = json.loads((mapped / "map_report.json").read_text())
    assert "finetune" not in rep["reports"]
    assert "pretune" in rep["reports"]


def test_map_cost_ceiling_exit_code(runner, trained, tmp_path):
    result = runner.invoke(
        main,
        ["map", "--model", str(trained), "--out", str(tmp_path / "mapped"),
         "--max-cost=-1"],
    )
    assert result.exit_code == 4
    assert "exceeds ceiling" in result.stderr


def test_infer_golden_only(runner, csv_data, trained):
    result = runner.invoke(main, [
        "infer", "--golden", "--model", str(trained), "--dataset", str(csv_data),
    ])
    assert result.exit_code == 0, result.output
    assert "golden accuracy 1.0000" in result.output


def test_infer_golden_needs_model(runner, csv_data):
    result = runner.invoke(main, ["infer", "--golden", "--dataset", str(csv_data)])
    assert result.exit_code == 2
    assert "--model" in result.stderr


def test_infer_analog_needs_tiles(runner, csv_data):
    result = runner.invoke(main, ["infer", "--dataset", str(csv_data)])
    assert result.exit_code == 2
    assert "--tiles" in result.stderr


def test_sweep_empty_grid_is_usage_error(runner, trained, csv_data):
    result = runner.invoke(main, [
        "sweep", "--param", "c2c_sigma", "--values", "",
        "--model", str(trained), "--dataset", str(csv_data),
    ])
    assert result.exit_code == 2
    assert "empty" in result.stderr


def test_sweep_writes_reproducible_csv(runner, trained, csv_data, tmp_path):
    out = tmp_path / "sweep.csv"
    args = [
        "sweep", "--param", "csa_offset", "--values", "0,5e-7",
        "--seeds", "0", "--model", str(trained), "--dataset", str(csv_data),
        "--out", str(out),
    ]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0].startswith("param,value,seed,golden_accuracy")
    assert len(lines) == 3
    first = out.read_bytes()
    result = runner.invoke(main, args)
    assert result.exit_code == 0
    assert out.read_bytes() == first


def test_report_summarizes_geometry(runner, csv_data, trained, tmp_path):
    mapped = tmp_path / "mapped"
    runner.invoke(main, ["map", "--model", str(trained), "--out", str(mapped),
                         "--exact"])
    report = tmp_path / "infer.json"
    runner.invoke(main, [
        "infer", "--tiles", str(mapped), "--dataset", str(csv_data),
        "--report", str(report),
    ])
    out = tmp_path / "report.json"
    result = runner.invoke(main, [
        "report", "--tiles", str(mapped), "--infer-report", str(report),
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["clause_tiles"][0]["rows"] == 8  # literals in use
    assert payload["clause_tiles"][0]["cols"] == 16
    assert payload["class_tiles"][0]["rows"] == 16
    assert payload["class_tiles"][0]["cols"] == 2
    assert payload["parallel_columns"] == 18
    assert payload["throughput_gops"] == pytest.approx(18 / 5e-9 / 1e9)
    assert payload["efficiency_tops_per_w"] > 0
    assert payload["references"]["clause_area_mm2"] == 2.477


def test_dump_device_config_round_trips(runner, tmp_path):
    out = tmp_path / "device.toml"
    result = runner.invoke(main, ["dump-device-config", "--out", str(out)])
    assert result.exit_code == 0, result.output
    parsed = load_toml(out)
    assert DeviceConfig.from_dict(parsed["device"]) == DeviceConfig()
    # a modified config dumps and loads back modified
    cfg = tmp_path / "exp.toml"
    cfg.write_text("[device]\nd2d_sigma = 0.05\n")
    result = runner.invoke(
        main, ["--config", str(cfg), "dump-device-config", "--out", str(out)]
    )
    assert result.exit_code == 0
    assert load_toml(out)["device"]["d2d_sigma"] == 0.05
