"""Command-line front door: generate, label, train, eval, filter, report.

Every command reads file-based inputs, writes its outputs atomically
(write-temp-then-rename), and drops a JSON run manifest next to its main
output with the resolved configuration, seeds, and timings needed to
reproduce the run.

Exit codes: 0 ok, 2 usage or bad configuration, 3 data error, 4 numeric
divergence, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .catalog import bundled_catalog, load_catalog
from .codec import FloatStats, TokenEmbedder, dumps_sequence, flatten, loads_sequence, parse
from .errors import (CheckpointError, ConfigError, DesignPipelineError,
                     TrainingDivergedError)
from .generator import GeneratorConfig, sample_design
from .physics import DEFAULT_CONSTANTS, PhysicsConstants, label_design
from .pipeline import (DatasetRecord, choose_threshold, estimate_compute_savings,
                       evaluate, filter_designs, histogram_csv, kept_from_line,
                       kept_to_line, load_dataset_lines, pr_curve_csv,
                       record_from_line, record_to_line, split_records,
                       verify_kept)
from .surrogate import ModelConfig, SurrogateModel, load_checkpoint, save_checkpoint
from .training import TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4
EXIT_IO = 5


def _atomic_write(path: str, payload, binary: bool = False) -> None:
    """Write a whole file through a sibling temp file and an atomic rename.

    `payload` is bytes/str, or an iterable of text lines (newlines added).
    """
    directory = os.path.dirname(os.path.abspath(path)) or "."
    mode = "wb" if binary else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-uavforge-")
    try:
        with os.fdopen(fd, mode) as fh:
            if isinstance(payload, (bytes, str)):
                fh.write(payload)
            else:
                for line in payload:
                    fh.write(line)
                    fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_path: str, command: str, started: float,
                    details: dict) -> None:
    manifest = {
        "tool": "uavforge",
        "version": __version__,
        "command": command,
        "outputs": details.pop("outputs", [out_path]),
        "wall_seconds": round(time.time() - started, 3),
        **details,
    }
    _atomic_write(out_path + ".manifest.json",
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_catalog_arg(path: str | None):
    if path is None:
        return bundled_catalog(), "<bundled>"
    with open(path, "rb") as fh:
        return load_catalog(fh), path


def _load_json_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return obj


def _read_design_lines(path: str):
    """Token sequences from a design file; labeled records are accepted too
    (their design field is extracted), which makes relabeling idempotent."""
    sequences = []
    with open(path) as fh:
        for number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                sequences.append(record_from_line(line, number).tokens)
            else:
                try:
                    sequences.append(loads_sequence(line))
                except DesignPipelineError as exc:
                    raise type(exc)(f"line {number}: {exc}") from exc
    return sequences


# ---------------------------------------------------------------------------
# Commands


def _cmd_generate(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    overrides = _load_json_config(args.config)
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = GeneratorConfig.from_dict(overrides)
    if args.count < 0:
        raise ConfigError(f"--count must be non-negative, got {args.count}")

    def lines():
        for i in range(args.start_index, args.start_index + args.count):
            yield dumps_sequence(flatten(sample_design(config, i, catalog)))

    _atomic_write(args.out, lines())
    _write_manifest(args.out, "generate", started, {
        "generator_config": config.to_dict(),
        "start_index": args.start_index,
        "count": args.count,
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    })
    print(f"generate: wrote {args.count} designs to {args.out}")
    return EXIT_OK


def _cmd_label(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    constants = (PhysicsConstants.from_dict(_load_json_config(args.constants))
                 if args.constants else DEFAULT_CONSTANTS)
    sequences = _read_design_lines(getattr(args, "in"))

    def lines():
        for number, tokens in enumerate(sequences, start=1):
            try:
                tree = parse(tokens, catalog)
                label, hover = label_design(tree, catalog, constants)
            except DesignPipelineError as exc:
                raise type(exc)(f"line {number}: {exc}") from exc
            yield record_to_line(DatasetRecord(tuple(tokens), label, hover))

    _atomic_write(args.out, lines())
    _write_manifest(args.out, "label", started, {
        "input": getattr(args, "in"),
        "input_sha256": _sha256_file(getattr(args, "in")),
        "count": len(sequences),
        "constants": constants.to_dict(),
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    })
    print(f"label: wrote {len(sequences)} labeled records to {args.out}")
    return EXIT_OK


def _load_labeled(path: str):
    with open(path) as fh:
        return load_dataset_lines(fh)


def _cmd_train(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    records = _load_labeled(args.data)
    assignment = split_records(records, args.split_seed)
    train_records = [r for r, s in zip(records, assignment) if s == "train"]

    model_config = ModelConfig.from_dict(_load_json_config(args.model_config))
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    if args.seed is not None:
        overrides["init_seed"] = args.seed
        overrides["shuffle_seed"] = args.seed
    train_config = TrainConfig.from_dict(overrides)

    sequences = [r.tokens for r in train_records]
    labels = np.array([float(r.label) for r in train_records])
    stats = FloatStats.from_sequences(sequences)
    embedder = TokenEmbedder(catalog, stats)
    model = SurrogateModel(model_config, stats, catalog.content_hash,
                           init_seed=train_config.init_seed)
    history = train(model, embedder, sequences, labels, train_config)

    buf = io.BytesIO()
    save_checkpoint(model, buf)
    _atomic_write(args.model_out, buf.getvalue(), binary=True)
    history_out = args.history_out or args.model_out + ".history.csv"
    _atomic_write(history_out, "epoch,loss,accuracy\n" + "".join(
        f"{h.epoch},{h.loss},{h.accuracy}\n" for h in history))
    final = history[-1]
    _write_manifest(args.model_out, "train", started, {
        "outputs": [args.model_out, history_out],
        "data": args.data,
        "data_sha256": _sha256_file(args.data),
        "split_seed": args.split_seed,
        "n_train": len(train_records),
        "n_test": len(records) - len(train_records),
        "model_config": model_config.to_dict(),
        "train_config": train_config.to_dict(),
        "final_loss": final.loss,
        "final_accuracy": final.accuracy,
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    })
    print(f"train: {len(history)} epochs, final loss {final.loss:.4f}, "
          f"accuracy {final.accuracy:.4f}; checkpoint at {args.model_out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    model = load_checkpoint(args.model, catalog=catalog,
                            allow_hash_mismatch=args.allow_hash_mismatch)
    records = _load_labeled(args.data)
    if args.split == "test":
        assignment = split_records(records, args.split_seed)
        records = [r for r, s in zip(records, assignment) if s == "test"]
    report = evaluate(model, records, catalog, threshold=args.threshold)
    _atomic_write(args.pr_out, pr_curve_csv(report))
    details = {
        "data": args.data,
        "split": args.split,
        "split_seed": args.split_seed,
        "model": args.model,
        "threshold": report.threshold,
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "confusion": {"tp": report.tp, "fp": report.fp,
                      "tn": report.tn, "fn": report.fn},
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    }
    if args.min_recall is not None:
        details["min_recall"] = args.min_recall
        details["calibrated_threshold"] = choose_threshold(report, args.min_recall)
    _write_manifest(args.pr_out, "eval", started, details)
    print(f"eval: accuracy {report.accuracy:.4f} precision {report.precision:.4f} "
          f"recall {report.recall:.4f} at threshold {report.threshold}")
    if "calibrated_threshold" in details:
        print(f"eval: threshold {details['calibrated_threshold']:.6f} achieves "
              f"recall >= {args.min_recall}")
    return EXIT_OK


def _cmd_filter(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    model = load_checkpoint(args.model, catalog=catalog)
    overrides = _load_json_config(args.config)
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = GeneratorConfig.from_dict(overrides)
    report = filter_designs(model, config, args.start_index, args.count,
                            args.threshold, catalog)
    _atomic_write(args.out, (kept_to_line(k) for k in report.kept))
    _write_manifest(args.out, "filter", started, {
        "model": args.model,
        "generator_config": config.to_dict(),
        "start_index": args.start_index,
        "n_proposed": report.n_proposed,
        "n_kept": report.n_kept,
        "keep_rate": report.n_kept / report.n_proposed if report.n_proposed else 0.0,
        "threshold": report.threshold,
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    })
    print(f"filter: kept {report.n_kept} of {report.n_proposed} designs "
          f"at threshold {report.threshold}")
    return EXIT_OK


def _cmd_report(args) -> int:
    started = time.time()
    catalog, catalog_src = _load_catalog_arg(args.catalog)
    constants = (PhysicsConstants.from_dict(_load_json_config(args.constants))
                 if args.constants else DEFAULT_CONSTANTS)
    with open(args.kept) as fh:
        kept = [kept_from_line(line, i) for i, line in enumerate(fh, start=1)
                if line.strip()]
    if not 0.0 < args.verify_fraction <= 1.0:
        raise ConfigError(
            f"--verify-fraction must be in (0,1], got {args.verify_fraction}")
    sample_size = int(round(args.verify_fraction * len(kept)))
    verification = verify_kept(kept, catalog, constants,
                               sample_size=sample_size, seed=args.seed)
    savings = estimate_compute_savings(args.n_proposed or len(kept), len(kept),
                                       args.minutes_per_eval)
    stem = args.out[:-5] if args.out.endswith(".json") else args.out
    prop_csv = stem + ".propellers.csv"
    wing_csv = stem + ".wings.csv"
    body = {
        "n_kept": len(kept),
        "n_verified": verification.n_sampled,
        "n_hover": verification.n_hover,
        "hover_rate": verification.hover_rate,
        "propeller_histogram": {str(k): v for k, v in
                                verification.propeller_histogram.items()},
        "wing_histogram": {str(k): v for k, v in
                           verification.wing_histogram.items()},
        "days_unfiltered": savings[0],
        "days_filtered": savings[1],
        "minutes_per_eval": args.minutes_per_eval,
    }
    _atomic_write(args.out, json.dumps(body, indent=2, sort_keys=True) + "\n")
    _atomic_write(prop_csv, histogram_csv(verification.propeller_histogram))
    _atomic_write(wing_csv, histogram_csv(verification.wing_histogram))
    _write_manifest(args.out, "report", started, {
        "outputs": [args.out, prop_csv, wing_csv],
        "kept": args.kept,
        "kept_sha256": _sha256_file(args.kept),
        "verify_fraction": args.verify_fraction,
        "seed": args.seed,
        "constants": constants.to_dict(),
        "catalog": catalog_src,
        "catalog_hash": catalog.content_hash.hex(),
    })
    print(f"report: {verification.n_hover}/{verification.n_sampled} verified "
          f"designs hover ({verification.hover_rate:.1%}); "
          f"compute {savings[0]} -> {savings[1]} days")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavforge",
        description="Generate, label, and surrogate-filter UAV designs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_catalog(p):
        p.add_argument("--catalog", help="catalog JSONL path (default: bundled)")

    p = sub.add_parser("generate", help="sample designs to a token-sequence file")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--seed", type=int, help="override the generator seed")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--start-index", type=int, default=0)
    p.add_argument("--out", required=True)
    add_catalog(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("label", help="label a design file with the hover oracle")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--constants", help="physics constants JSON")
    add_catalog(p)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("train", help="train the surrogate on a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out")
    p.add_argument("--model-config", help="model architecture JSON")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int, help="init and shuffle seed")
    p.add_argument("--split-seed", type=int, default=0)
    add_catalog(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="confusion metrics and PR curve")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--pr-out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-recall", type=float,
                   help="also report the calibrated threshold for this recall")
    p.add_argument("--split", choices=("test", "all"), default="test")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--allow-hash-mismatch", action="store_true")
    add_catalog(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("filter", help="rejection-sample designs through the surrogate")
    p.add_argument("--model", required=True)
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--seed", type=int, help="override the generator seed")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--start-index", type=int, default=0)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", required=True)
    add_catalog(p)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("report", help="verify kept designs and report histograms")
    p.add_argument("--kept", required=True)
    p.add_argument("--verify-fraction", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-proposed", type=int,
                   help="proposal count for compute-savings (default: kept count)")
    p.add_argument("--minutes-per-eval", type=float, default=4.0)
    p.add_argument("--constants", help="physics constants JSON")
    add_catalog(p)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"uavforge {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as exc:
        print(f"uavforge {args.command}: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DesignPipelineError as exc:
        print(f"uavforge {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"uavforge {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
