"""Dataset building, metrics, threshold calibration, and surrogate filtering.

The three-stage workflow: sample designs and label them with the hover
oracle, train the surrogate on the labeled corpus, then rejection-sample a
fresh design stream through the surrogate and keep only candidates whose
predicted hover probability clears a recall-calibrated threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog
from .codec import Token, TokenEmbedder, flatten, loads_sequence, parse
from .design import count_components
from .errors import (CalibrationError, CheckpointError, ConfigError, DatasetError)
from .generator import GeneratorConfig, sample_design
from .physics import DEFAULT_CONSTANTS, HoverResult, PhysicsConstants, label_design
from .surrogate import SurrogateModel

PR_THRESHOLDS = 100
DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_MINUTES_PER_EVAL = 4.0
MINUTES_PER_DAY = 24.0 * 60.0


@dataclass(frozen=True)
class DatasetRecord:
    tokens: tuple[Token, ...]
    label: int
    hover: HoverResult


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled design corpus with a seeded train/test split.

    `split` holds "train"/"test" per record; `provenance` records how the
    corpus was produced (generator config, index range, catalog hash, split
    seed) so a dataset can be rebuilt from its description.
    """

    records: tuple[DatasetRecord, ...]
    split: tuple[str, ...]
    provenance: dict

    def __post_init__(self):
        if len(self.records) != len(self.split):
            raise DatasetError("split assignment length does not match records")

    def subset(self, which: str) -> tuple[DatasetRecord, ...]:
        return tuple(r for r, s in zip(self.records, self.split) if s == which)

    @property
    def train_records(self) -> tuple[DatasetRecord, ...]:
        return self.subset("train")

    @property
    def test_records(self) -> tuple[DatasetRecord, ...]:
        return self.subset("test")


def split_records(records, split_seed: int,
                  train_fraction: float = DEFAULT_TRAIN_FRACTION) -> tuple[str, ...]:
    """Seeded random train/test assignment; both splits must see both labels."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0,1), got {train_fraction}")
    n = len(records)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((split_seed,))))
    perm = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    assignment = ["test"] * n
    for i in perm[:n_train]:
        assignment[i] = "train"
    for which in ("train", "test"):
        labels = {r.label for r, s in zip(records, assignment) if s == which}
        if labels != {0, 1}:
            raise DatasetError(
                f"degenerate split: {which} split does not contain both classes")
    return tuple(assignment)


def build_dataset(gen_config: GeneratorConfig, n: int, catalog: Catalog,
                  constants: PhysicsConstants = DEFAULT_CONSTANTS,
                  split_seed: int = 0,
                  train_fraction: float = DEFAULT_TRAIN_FRACTION) -> LabeledDataset:
    """Sample designs at indices 0..n-1, oracle-label them, and split them."""
    if n < 10:
        raise DatasetError(f"need at least 10 designs to build a dataset, got {n}")
    records = []
    for index in range(n):
        tree = sample_design(gen_config, index, catalog)
        label, hover = label_design(tree, catalog, constants)
        records.append(DatasetRecord(tuple(flatten(tree)), label, hover))
    assignment = split_records(records, split_seed, train_fraction)
    provenance = {
        "generator_config": gen_config.to_dict(),
        "index_range": [0, n],
        "catalog_hash": catalog.content_hash.hex(),
        "constants": constants.to_dict(),
        "split_seed": split_seed,
        "train_fraction": train_fraction,
    }
    return LabeledDataset(tuple(records), assignment, provenance)


# ---------------------------------------------------------------------------
# Dataset files: one JSON object per line.


def record_to_line(record: DatasetRecord) -> str:
    body = json.dumps({
        "design": [{t.key: t.value} for t in record.tokens],
        "hover_time_s": record.hover.hover_time_s,
        "label": record.label,
        "failure_reason": record.hover.failure_reason,
    }, separators=(",", ":"))
    return body


def record_from_line(line: str, line_number: int = 0) -> DatasetRecord:
    where = f"line {line_number}: " if line_number else ""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{where}not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "design" not in obj:
        raise DatasetError(f"{where}expected an object with a 'design' field")
    try:
        tokens = loads_sequence(json.dumps(obj["design"]))
    except Exception as exc:
        raise DatasetError(f"{where}bad design tokens: {exc}") from exc
    label = obj.get("label")
    if label not in (0, 1):
        raise DatasetError(f"{where}label must be 0 or 1, got {label!r}")
    hover_time = obj.get("hover_time_s")
    if not isinstance(hover_time, (int, float)) or isinstance(hover_time, bool):
        raise DatasetError(f"{where}hover_time_s must be a number, got {hover_time!r}")
    reason = obj.get("failure_reason")
    if reason is not None and not isinstance(reason, str):
        raise DatasetError(f"{where}failure_reason must be a string or null")
    hover = HoverResult(can_hover=label == 1, hover_time_s=float(hover_time),
                        total_mass_kg=float("nan"), hover_power_W=float("nan"),
                        failure_reason=reason)
    return DatasetRecord(tuple(tokens), int(label), hover)


def load_dataset_lines(lines) -> list[DatasetRecord]:
    return [record_from_line(line, i) for i, line in enumerate(lines, start=1)
            if line.strip()]


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class EvalReport:
    threshold: float
    accuracy: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int
    pr_curve: tuple  # (threshold, precision, recall) at 100 grid points


def predict_records(model: SurrogateModel, records, catalog: Catalog,
                    batch_size: int = 128) -> np.ndarray:
    """Hover probabilities for dataset records, batched and padded per batch."""
    embedder = TokenEmbedder(catalog, model.float_stats)
    probs = np.empty(len(records))
    for start in range(0, len(records), batch_size):
        chunk = records[start:start + batch_size]
        data, mask = embedder.embed_batch([r.tokens for r in chunk])
        probs[start:start + len(chunk)] = model.predict_proba(data, mask)
    return probs


def _confusion(probs: np.ndarray, labels: np.ndarray, threshold: float):
    pred = probs >= threshold
    actual = labels == 1
    tp = int((pred & actual).sum())
    fp = int((pred & ~actual).sum())
    tn = int((~pred & ~actual).sum())
    fn = int((~pred & actual).sum())
    return tp, fp, tn, fn


def _precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    # no predicted positives: vacuous precision 1; no actual positives: vacuous recall 1
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall


def evaluate(model: SurrogateModel, records, catalog: Catalog,
             threshold: float = 0.5, batch_size: int = 128) -> EvalReport:
    """Confusion metrics at `threshold` plus a 100-point precision/recall curve."""
    if not records:
        raise DatasetError("cannot evaluate on an empty record set")
    probs = predict_records(model, records, catalog, batch_size)
    labels = np.array([r.label for r in records])
    tp, fp, tn, fn = _confusion(probs, labels, threshold)
    precision, recall = _precision_recall(tp, fp, fn)
    curve = []
    for t in np.linspace(0.0, 1.0, PR_THRESHOLDS):
        ctp, cfp, _, cfn = _confusion(probs, labels, t)
        cp, cr = _precision_recall(ctp, cfp, cfn)
        curve.append((float(t), cp, cr))
    return EvalReport(threshold=float(threshold),
                      accuracy=(tp + tn) / len(records),
                      precision=precision, recall=recall,
                      tp=tp, fp=fp, tn=tn, fn=fn, pr_curve=tuple(curve))


def choose_threshold(report: EvalReport, min_recall: float) -> float:
    """Largest grid threshold whose recall still meets `min_recall`."""
    if not 0.0 < min_recall <= 1.0:
        raise ConfigError(f"min_recall must be in (0,1], got {min_recall}")
    feasible = [t for t, _, r in report.pr_curve if r >= min_recall]
    if not feasible:
        raise CalibrationError(
            f"no threshold on the curve reaches recall {min_recall}")
    return max(feasible)


def pr_curve_csv(report: EvalReport) -> str:
    lines = ["threshold,precision,recall"]
    lines += [f"{t},{p},{r}" for t, p, r in report.pr_curve]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Filtering


@dataclass(frozen=True)
class KeptDesign:
    index: int
    tokens: tuple[Token, ...]
    probability: float


@dataclass(frozen=True)
class FilterReport:
    n_proposed: int
    n_kept: int
    threshold: float
    kept: tuple[KeptDesign, ...]

    def __post_init__(self):
        if self.n_kept != len(self.kept) or self.n_kept > self.n_proposed:
            raise DatasetError("inconsistent filter report counts")


def filter_designs(model: SurrogateModel, gen_config: GeneratorConfig,
                   start_index: int, n: int, threshold: float, catalog: Catalog,
                   batch_size: int = 128) -> FilterReport:
    """Stream n generated designs through the surrogate, keeping those with
    predicted hover probability >= threshold.  Rejected designs are dropped
    batch by batch, so memory tracks the kept set only."""
    if model.catalog_hash != catalog.content_hash:
        raise CheckpointError(
            "hash mismatch: model was trained against a different catalog")
    if n < 0:
        raise ConfigError(f"n must be non-negative, got {n}")
    embedder = TokenEmbedder(catalog, model.float_stats)
    kept = []
    for chunk_start in range(start_index, start_index + n, batch_size):
        indices = range(chunk_start, min(chunk_start + batch_size, start_index + n))
        sequences = [tuple(flatten(sample_design(gen_config, i, catalog)))
                     for i in indices]
        data, mask = embedder.embed_batch(sequences)
        probs = model.predict_proba(data, mask)
        for i, tokens, p in zip(indices, sequences, probs):
            if p >= threshold:
                kept.append(KeptDesign(i, tokens, float(p)))
    return FilterReport(n_proposed=n, n_kept=len(kept), threshold=float(threshold),
                        kept=tuple(kept))


def kept_to_line(design: KeptDesign) -> str:
    return json.dumps({
        "index": design.index,
        "probability": design.probability,
        "design": [{t.key: t.value} for t in design.tokens],
    }, separators=(",", ":"))


def kept_from_line(line: str, line_number: int = 0) -> KeptDesign:
    where = f"line {line_number}: " if line_number else ""
    try:
        obj = json.loads(line)
        tokens = loads_sequence(json.dumps(obj["design"]))
        return KeptDesign(index=int(obj["index"]),
                          tokens=tuple(tokens),
                          probability=float(obj["probability"]))
    except DatasetError:
        raise
    except Exception as exc:
        raise DatasetError(f"{where}bad kept-design record: {exc}") from exc


# ---------------------------------------------------------------------------
# Verification


@dataclass(frozen=True)
class VerificationReport:
    n_sampled: int
    n_hover: int
    hover_rate: float
    propeller_histogram: dict
    wing_histogram: dict

    def __post_init__(self):
        for hist in (self.propeller_histogram, self.wing_histogram):
            if sum(hist.values()) != self.n_hover:
                raise DatasetError("histogram totals must equal the hover count")


def verify_kept(kept, catalog: Catalog,
                constants: PhysicsConstants = DEFAULT_CONSTANTS,
                sample_size: int | None = None, seed: int = 0) -> VerificationReport:
    """Oracle-label a seeded uniform subsample of kept designs and histogram
    propeller/wing counts over the ones that verify as hovering."""
    if sample_size is None:
        sample_size = len(kept)
    if sample_size < 0 or sample_size > len(kept):
        raise ConfigError(
            f"sample_size must be in [0, {len(kept)}], got {sample_size}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed,))))
    chosen = sorted(rng.choice(len(kept), size=sample_size, replace=False))
    n_hover = 0
    prop_hist: dict[int, int] = {}
    wing_hist: dict[int, int] = {}
    for i in chosen:
        tree = parse(kept[i].tokens, catalog)
        label, _ = label_design(tree, catalog, constants)
        if label == 1:
            n_hover += 1
            counts = count_components(tree)
            prop_hist[counts.propellers] = prop_hist.get(counts.propellers, 0) + 1
            wing_hist[counts.wings] = wing_hist.get(counts.wings, 0) + 1
    rate = n_hover / sample_size if sample_size else 0.0
    return VerificationReport(n_sampled=sample_size, n_hover=n_hover,
                              hover_rate=rate,
                              propeller_histogram=dict(sorted(prop_hist.items())),
                              wing_histogram=dict(sorted(wing_hist.items())))


def histogram_csv(histogram: dict) -> str:
    lines = ["count,frequency"]
    lines += [f"{k},{v}" for k, v in sorted(histogram.items())]
    return "\n".join(lines) + "\n"


def estimate_compute_savings(n_proposed: int, n_kept: int,
                             minutes_per_eval: float = DEFAULT_MINUTES_PER_EVAL):
    """Days of simulation compute with and without the surrogate filter,
    rounded to 0.1 day."""
    if minutes_per_eval <= 0:
        raise ConfigError(f"minutes_per_eval must be positive, got {minutes_per_eval}")
    if n_proposed < 0 or n_kept < 0 or n_kept > n_proposed:
        raise ConfigError("need 0 <= n_kept <= n_proposed")
    days_unfiltered = round(n_proposed * minutes_per_eval / MINUTES_PER_DAY, 1)
    days_filtered = round(n_kept * minutes_per_eval / MINUTES_PER_DAY, 1)
    return days_unfiltered, days_filtered
