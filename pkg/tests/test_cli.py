"""End-to-end command-line workflow, exit codes, and output hygiene."""

import json
import os

import pytest

from uavforge.cli import main
from uavforge.codec import loads_sequence, parse
from uavforge.pipeline import kept_from_line, load_dataset_lines
from uavforge.surrogate import ModelConfig, SurrogateModel, load_checkpoint, save_checkpoint

TINY_MODEL_CONFIG = {"d_model": 8, "n_layers": 1, "n_heads": 2, "d_ff": 16,
                     "input_dim": 741, "max_seq_len": 256}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One full CLI pass: generate -> label -> train -> eval -> filter -> report."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "designs": str(root / "designs.jsonl"),
        "labeled": str(root / "labeled.jsonl"),
        "model": str(root / "surrogate.ckpt"),
        "history": str(root / "history.csv"),
        "pr": str(root / "pr.csv"),
        "kept": str(root / "kept.jsonl"),
        "report": str(root / "report.json"),
        "model_config": str(root / "model.json"),
    }
    with open(paths["model_config"], "w") as fh:
        json.dump(TINY_MODEL_CONFIG, fh)

    assert main(["generate", "--count", "60", "--seed", "42",
                 "--out", paths["designs"]]) == 0
    assert main(["label", "--in", paths["designs"],
                 "--out", paths["labeled"]]) == 0
    assert main(["train", "--data", paths["labeled"],
                 "--model-out", paths["model"],
                 "--history-out", paths["history"],
                 "--model-config", paths["model_config"],
                 "--epochs", "3", "--batch-size", "32", "--seed", "0"]) == 0
    assert main(["eval", "--model", paths["model"], "--data", paths["labeled"],
                 "--pr-out", paths["pr"], "--min-recall", "0.5"]) == 0
    assert main(["filter", "--model", paths["model"], "--seed", "7",
                 "--count", "40", "--threshold", "0.0",
                 "--out", paths["kept"]]) == 0
    assert main(["report", "--kept", paths["kept"], "--verify-fraction", "1.0",
                 "--out", paths["report"], "--n-proposed", "40"]) == 0
    return paths


def read_lines(path):
    with open(path) as fh:
        return [line for line in fh.read().splitlines() if line.strip()]


# -- outputs of the full pass


def test_generate_writes_parseable_designs(workdir, catalog):
    lines = read_lines(workdir["designs"])
    assert len(lines) == 60
    for line in lines[:10]:
        assert parse(loads_sequence(line), catalog) is not None


def test_label_writes_loadable_records(workdir):
    records = load_dataset_lines(read_lines(workdir["labeled"]))
    assert len(records) == 60
    assert {r.label for r in records} == {0, 1}


def test_relabeling_labeled_records_is_idempotent(workdir, tmp_path):
    again = str(tmp_path / "relabel.jsonl")
    assert main(["label", "--in", workdir["labeled"], "--out", again]) == 0
    with open(workdir["labeled"], "rb") as fh:
        first = fh.read()
    with open(again, "rb") as fh:
        assert fh.read() == first


def test_train_writes_a_loadable_checkpoint_and_history(workdir, catalog):
    model = load_checkpoint(workdir["model"], catalog=catalog)
    assert model.config == ModelConfig.from_dict(TINY_MODEL_CONFIG)
    history = read_lines(workdir["history"])
    assert history[0] == "epoch,loss,accuracy"
    assert len(history) == 4
    assert [int(row.split(",")[0]) for row in history[1:]] == [0, 1, 2]


def test_eval_writes_the_pr_curve(workdir):
    lines = read_lines(workdir["pr"])
    assert lines[0] == "threshold,precision,recall"
    assert len(lines) == 101
    manifest = json.load(open(workdir["pr"] + ".manifest.json"))
    assert manifest["command"] == "eval"
    assert 0.0 <= manifest["accuracy"] <= 1.0
    assert "calibrated_threshold" in manifest
    assert manifest["min_recall"] == 0.5


def test_filter_keeps_everything_at_threshold_zero(workdir):
    lines = read_lines(workdir["kept"])
    assert len(lines) == 40
    kept = [kept_from_line(line) for line in lines]
    assert [k.index for k in kept] == list(range(40))
    manifest = json.load(open(workdir["kept"] + ".manifest.json"))
    assert manifest["n_kept"] == 40
    assert manifest["keep_rate"] == 1.0


def test_report_verifies_and_histograms(workdir):
    body = json.load(open(workdir["report"]))
    assert body["n_kept"] == 40
    assert body["n_verified"] == 40
    assert 0.0 <= body["hover_rate"] <= 1.0
    assert sum(body["propeller_histogram"].values()) == body["n_hover"]
    assert body["days_unfiltered"] == pytest.approx(40 * 4 / 1440, abs=0.05)
    stem = workdir["report"][:-5]
    assert read_lines(stem + ".propellers.csv")[0] == "count,frequency"
    assert read_lines(stem + ".wings.csv")[0] == "count,frequency"


def test_every_command_leaves_a_manifest(workdir):
    for key in ("designs", "labeled", "model", "pr", "kept", "report"):
        manifest_path = workdir[key] + ".manifest.json"
        manifest = json.load(open(manifest_path))
        assert manifest["tool"] == "uavforge"
        assert manifest["wall_seconds"] >= 0
        assert workdir[key] in manifest["outputs"]


def test_no_temp_files_left_behind(workdir):
    directory = os.path.dirname(workdir["designs"])
    leftovers = [name for name in os.listdir(directory)
                 if name.startswith(".tmp-uavforge-")]
    assert leftovers == []


# -- determinism


def test_generate_is_bitwise_reproducible(workdir, tmp_path):
    again = str(tmp_path / "designs2.jsonl")
    assert main(["generate", "--count", "60", "--seed", "42", "--out", again]) == 0
    with open(workdir["designs"], "rb") as fh:
        first = fh.read()
    with open(again, "rb") as fh:
        assert fh.read() == first


def test_train_is_bitwise_reproducible(workdir, tmp_path):
    again = str(tmp_path / "surrogate2.ckpt")
    assert main(["train", "--data", workdir["labeled"], "--model-out", again,
                 "--model-config", workdir["model_config"],
                 "--epochs", "3", "--batch-size", "32", "--seed", "0"]) == 0
    with open(workdir["model"], "rb") as fh:
        first = fh.read()
    with open(again, "rb") as fh:
        assert fh.read() == first


# -- exit codes


def test_zero_count_generates_an_empty_file(tmp_path):
    out = str(tmp_path / "empty.jsonl")
    assert main(["generate", "--count", "0", "--out", out]) == 0
    assert open(out).read() == ""
    assert json.load(open(out + ".manifest.json"))["count"] == 0


def test_usage_errors_exit_2(tmp_path, capsys):
    out = str(tmp_path / "x.jsonl")
    assert main(["generate", "--count", "-5", "--out", out]) == 2
    assert "configuration error" in capsys.readouterr().err
    bad_config = tmp_path / "bad.json"
    bad_config.write_text("{nope")
    assert main(["generate", "--count", "1", "--config", str(bad_config),
                 "--out", out]) == 2
    with pytest.raises(SystemExit):
        main(["generate", "--count", "1"])  # --out is required
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_malformed_data_exits_3_and_names_the_line(workdir, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    lines = read_lines(workdir["designs"])[:3]
    bad.write_text("\n".join([lines[0], "[not json", lines[1]]) + "\n")
    out = str(tmp_path / "out.jsonl")
    assert main(["label", "--in", str(bad), "--out", out]) == 3
    err = capsys.readouterr().err
    assert "line 2" in err and "data error" in err
    assert not os.path.exists(out)  # failed before any output was promoted


def test_missing_input_exits_5(tmp_path, capsys):
    assert main(["label", "--in", str(tmp_path / "nope.jsonl"),
                 "--out", str(tmp_path / "out.jsonl")]) == 5
    assert "I/O error" in capsys.readouterr().err


def test_mismatched_catalog_hash_exits_3(workdir, tmp_path, catalog, capsys):
    stray = SurrogateModel(ModelConfig.from_dict(TINY_MODEL_CONFIG),
                           catalog_hash=b"\x00" * 32)
    path = str(tmp_path / "stray.ckpt")
    save_checkpoint(stray, path)
    args = ["eval", "--model", path, "--data", workdir["labeled"],
            "--pr-out", str(tmp_path / "pr.csv")]
    assert main(args) == 3
    assert "hash mismatch" in capsys.readouterr().err
    assert main(args + ["--allow-hash-mismatch"]) == 0


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
