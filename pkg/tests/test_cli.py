import csv
import json

import numpy as np
import pytest

from lded_acoustic.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main, read_mfcc_bin, write_mfcc_bin


def small_config(path):
    layers = [
        {"label": lab, "duration": 3.0, "start": [0.0, 0.0, 0.5 * i], "end": [15.0, 0.0, 0.5 * i], "dwell": 0.5}
        for i, lab in enumerate((0, 1, 2, 0, 1, 2))
    ]
    layers[-1]["dwell"] = 0.0
    path.write_text(json.dumps({"scripts": [{"name": "mini", "layers": layers}], "snr_db": 10.0}))
    return path


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = small_config(root / "corpus.json")
    assert main(["synth", "--config", str(cfg), "--seed", "3", "--out", str(root / "corpus")]) == EXIT_OK
    return root


def run(*argv):
    return main([str(a) for a in argv])


def test_help_and_usage_errors(capsys):
    assert run("--help") == EXIT_OK
    assert run() == EXIT_USAGE
    assert run("train", "--model", "cnn") == EXIT_USAGE
    assert run("bogus") == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_missing_input_is_a_data_error(tmp_path, capsys):
    assert run("denoise", "--input", tmp_path / "nope.wav", "--out", tmp_path / "o") == EXIT_DATA
    assert "error" in capsys.readouterr().err


def test_bad_model_file_is_a_data_error(tmp_path, corpus):
    bad = tmp_path / "model.json"
    bad.write_text("[1, 2]")
    argv = ["eval", "--manifest", corpus / "corpus" / "manifest.json", "--model-file", bad, "--seed", 0, "--out", tmp_path]
    assert run(*argv) == EXIT_DATA


def test_runs_must_be_positive(tmp_path, corpus):
    argv = ["eval", "--manifest", corpus / "corpus" / "manifest.json", "--model", "logistic", "--runs", 0, "--seed", 0]
    assert run(*argv, "--out", tmp_path) == EXIT_USAGE


def test_mfcc_bin_round_trip(tmp_path):
    m = np.random.default_rng(0).normal(size=(20, 85)).astype(np.float32)
    write_mfcc_bin(tmp_path / "m.bin", m)
    assert np.array_equal(read_mfcc_bin(tmp_path / "m.bin"), m)
    assert (tmp_path / "m.bin").stat().st_size == 8 + 4 * 20 * 85


def test_full_chain(corpus, tmp_path):
    manifest = corpus / "corpus" / "manifest.json"
    wav = sorted((corpus / "corpus").glob("*.wav"))[0]

    assert run("denoise", "--input", wav, "--out", tmp_path / "dn") == EXIT_OK
    for stage in ("raw", "eq", "bp", "dn"):
        assert (tmp_path / "dn" / f"{wav.stem}.{stage}.wav").exists()

    assert run("features", "--manifest", manifest, "--mfcc", "--out", tmp_path / "feat") == EXIT_OK
    with open(tmp_path / "feat" / "features.csv") as fh:
        assert fh.readline().startswith("# config_hash=")
        rows = list(csv.DictReader(fh))
    assert len(rows) == 36
    assert len(list((tmp_path / "feat" / "mfcc").glob("*.bin"))) == 36

    assert run("analyze", "--features", tmp_path / "feat" / "features.csv", "--seed", 0, "--out", tmp_path / "an") == EXIT_OK
    for name in ("correlation.csv", "pca.csv", "importance.csv"):
        assert (tmp_path / "an" / name).exists()

    assert run("train", "--manifest", manifest, "--model", "cnn", "--epochs", 2, "--seed", 1, "--out", tmp_path / "cnn") == EXIT_OK
    assert (tmp_path / "cnn" / "epoch_log.csv").exists()
    assert run("train", "--manifest", manifest, "--model", "random_forest", "--seed", 1, "--out", tmp_path / "rf") == EXIT_OK

    out = tmp_path / "ev"
    assert run("eval", "--manifest", manifest, "--model", "logistic", "--runs", 5, "--seed", 0, "--out", out) == EXIT_OK
    doc = json.loads((out / "metrics_logistic_dn.json").read_text())
    assert doc["runs"] == 5
    assert {"mean", "std"} <= set(doc["accuracy"])
    assert doc["config_hash"] and doc["seed"] == 0

    assert run("eval", "--manifest", manifest, "--model-file", tmp_path / "rf" / "model.json", "--seed", 0,
               "--out", tmp_path / "ev2") == EXIT_OK

    assert run("stream", "--model-file", tmp_path / "rf" / "model.json", "--manifest", manifest,
               "--out", tmp_path / "st") == EXIT_OK
    lines = (tmp_path / "st" / "mini.jsonl").read_text().splitlines()
    assert len(lines) == 41  # 20.5 s of audio, dwell included
    report = json.loads((tmp_path / "st" / "mini.report.json").read_text())
    assert report["total_drops"] == 0 and report["meta"]["config_hash"]


def test_train_is_deterministic(corpus, tmp_path):
    manifest = corpus / "corpus" / "manifest.json"
    for d in ("a", "b"):
        assert run("train", "--manifest", manifest, "--model", "cnn", "--epochs", 2, "--seed", 4, "--out", tmp_path / d) == EXIT_OK
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()
    assert (tmp_path / "a" / "epoch_log.csv").read_bytes() == (tmp_path / "b" / "epoch_log.csv").read_bytes()


def test_synth_is_deterministic(tmp_path):
    cfg = small_config(tmp_path / "c.json")
    for d in ("a", "b"):
        assert run("synth", "--config", cfg, "--seed", 9, "--out", tmp_path / d) == EXIT_OK
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
