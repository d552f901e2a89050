"""Split protocols, evaluation runner, synthetic corpus, and report writing.

The four protocols partition a manifest class-wise:

* setting 1: within one category, 5-fold CV over its 10 classes (8 train / 2 test);
* setting 2: every ordered (train category, test category) pair;
* setting 3: leave one category out (40 train / 10 test classes);
* setting 4: setting 3 plus 8-fold few-shot CV, moving 5 samples of every
  evaluation class into training and testing on the remaining 35.

Train and test class sets are disjoint for settings 1-3; prediction always
ranks only the test class set. Strict validation expects the 5-category,
10-class, 40-sample layout; ``relaxed=True`` admits other shapes (synthetic
corpora) while keeping the same constructions.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import (
    DatasetManifest,
    ManifestRecord,
    WordVectorTable,
    write_embeddings,
    write_labels_csv,
    write_manifest,
    write_word_vectors,
)
from .errors import (
    DimensionError,
    MissingEmbeddingError,
    ParameterError,
    ProtocolError,
)
from .model import (
    ClassSet,
    LabeledClass,
    TrainingConfig,
    TrainingSet,
    l2_normalize_rows,
    train,
)

SETTINGS = ("S1", "S2", "S3", "S4")


@dataclass(frozen=True)
class Run:
    """One train/test partition of an evaluation plan."""

    label: str
    train_classes: list[str]
    test_classes: list[str]
    train_ids: list[str]
    test_ids: list[str]
    few_shot_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class EvaluationPlan:
    setting: str
    runs: list[Run]
    seed: int | None
    description: str


@dataclass(frozen=True)
class RunResult:
    label: str
    accuracy: float
    n_test: int
    n_correct: int


@dataclass(frozen=True)
class AccuracyReport:
    setting: str
    runs: list[RunResult]
    aggregate: float
    metadata: dict


class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    def __init__(self, labels: Sequence[str], counts):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (len(labels), len(labels)):
            raise DimensionError(
                f"confusion counts shape {counts.shape} does not match {len(labels)} labels"
            )
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")
        self.labels = list(labels)
        self.counts = counts

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        """Top-1 accuracy in percent: 100 * diagonal / total."""
        return 100.0 * float(np.trace(self.counts)) / self.total


def _category_layout(manifest: DatasetManifest) -> dict[str, list[str]]:
    return manifest.classes_by_category()


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ProtocolError(message)


def _check_samples_per_class(manifest: DatasetManifest, labels: Sequence[str], expected: int) -> None:
    ids = manifest.ids_by_label()
    for label in labels:
        n = len(ids.get(label, []))
        _require(n == expected, f"class '{label}' has {n} samples, expected {expected}")


def _check_category_shape(manifest: DatasetManifest, relaxed: bool) -> dict[str, list[str]]:
    cats = _category_layout(manifest)
    if relaxed:
        _require(len(cats) >= 2, f"manifest has {len(cats)} categories, need at least 2")
        return cats
    _require(len(cats) == 5, f"manifest has {len(cats)} categories, expected 5")
    for category, labels in cats.items():
        _require(
            len(labels) == 10, f"category '{category}' has {len(labels)} classes, expected 10"
        )
        _check_samples_per_class(manifest, labels, 40)
    return cats


def _ids_of_classes(manifest: DatasetManifest, labels: Sequence[str]) -> list[str]:
    wanted = set(labels)
    return [r.sample_id for r in manifest.records if r.label in wanted]


def plan_setting1(
    manifest: DatasetManifest, category: str, seed: int, *, relaxed: bool = False
) -> EvaluationPlan:
    """5-fold CV inside one category: per fold, 2 test classes, the rest train."""
    cats = _category_layout(manifest)
    _require(category in cats, f"unknown category '{category}'")
    labels = cats[category]
    if relaxed:
        _require(
            len(labels) >= 4 and len(labels) % 2 == 0,
            f"category '{category}' has {len(labels)} classes, need an even count >= 4",
        )
    else:
        _require(
            len(labels) == 10, f"category '{category}' has {len(labels)} classes, expected 10"
        )
        _check_samples_per_class(manifest, labels, 40)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(labels))
    runs = []
    for k in range(len(labels) // 2):
        fold = {labels[perm[2 * k]], labels[perm[2 * k + 1]]}
        test_classes = [lb for lb in labels if lb in fold]
        train_classes = [lb for lb in labels if lb not in fold]
        runs.append(
            Run(
                label=f"{category}-fold{k}",
                train_classes=train_classes,
                test_classes=test_classes,
                train_ids=_ids_of_classes(manifest, train_classes),
                test_ids=_ids_of_classes(manifest, test_classes),
            )
        )
    return EvaluationPlan(
        setting="S1",
        runs=runs,
        seed=seed,
        description=f"setting 1: {len(runs)}-fold class CV within category '{category}'",
    )


def plan_setting2(manifest: DatasetManifest, *, relaxed: bool = False) -> EvaluationPlan:
    """All ordered (train category, test category) pairs with train != test."""
    cats = _check_category_shape(manifest, relaxed)
    names = list(cats)
    runs = []
    for train_cat in names:
        for test_cat in names:
            if train_cat == test_cat:
                continue
            runs.append(
                Run(
                    label=f"{train_cat}-to-{test_cat}",
                    train_classes=list(cats[train_cat]),
                    test_classes=list(cats[test_cat]),
                    train_ids=_ids_of_classes(manifest, cats[train_cat]),
                    test_ids=_ids_of_classes(manifest, cats[test_cat]),
                )
            )
    return EvaluationPlan(
        setting="S2",
        runs=runs,
        seed=None,
        description=f"setting 2: {len(runs)} ordered category pairs",
    )


def plan_setting3(manifest: DatasetManifest, *, relaxed: bool = False) -> EvaluationPlan:
    """Leave one category out: train on all others, test on the held-out one."""
    cats = _check_category_shape(manifest, relaxed)
    names = list(cats)
    runs = []
    for held_out in names:
        train_classes = [lb for cat in names if cat != held_out for lb in cats[cat]]
        test_classes = list(cats[held_out])
        runs.append(
            Run(
                label=held_out,
                train_classes=train_classes,
                test_classes=test_classes,
                train_ids=_ids_of_classes(manifest, train_classes),
                test_ids=_ids_of_classes(manifest, test_classes),
            )
        )
    return EvaluationPlan(
        setting="S3",
        runs=runs,
        seed=None,
        description=f"setting 3: leave-one-category-out over {len(runs)} categories",
    )


def _few_shot_folds(sample_ids: Sequence[str], rng: np.random.Generator, n_folds: int) -> list[list[str]]:
    perm = [sample_ids[i] for i in rng.permutation(len(sample_ids))]
    base = len(perm) // n_folds
    extra = len(perm) % n_folds
    folds = []
    start = 0
    for f in range(n_folds):
        size = base + (1 if f < extra else 0)
        folds.append(perm[start : start + size])
        start += size
    return folds


def plan_setting4(
    manifest: DatasetManifest, seed: int, *, relaxed: bool = False, n_folds: int = 8
) -> EvaluationPlan:
    """Few-shot variant of setting 3: per held-out category, 8-fold CV moving a
    small per-class fold of the evaluation classes into the training side."""
    cats = _check_category_shape(manifest, relaxed)
    ids = manifest.ids_by_label()
    if relaxed:
        for labels in cats.values():
            for label in labels:
                _require(
                    len(ids[label]) >= n_folds,
                    f"class '{label}' has {len(ids[label])} samples, need at least {n_folds}",
                )
    rng = np.random.default_rng(seed)
    names = list(cats)
    folds_by_label = {label: _few_shot_folds(ids[label], rng, n_folds) for cat in names for label in cats[cat]}
    runs = []
    for held_out in names:
        base_classes = [lb for cat in names if cat != held_out for lb in cats[cat]]
        eval_classes = list(cats[held_out])
        base_ids = set(_ids_of_classes(manifest, base_classes))
        for f in range(n_folds):
            few = {sid for label in eval_classes for sid in folds_by_label[label][f]}
            train_inc = base_ids | few
            train_ids = [r.sample_id for r in manifest.records if r.sample_id in train_inc]
            test_ids = [
                r.sample_id
                for r in manifest.records
                if r.label in set(eval_classes) and r.sample_id not in few
            ]
            runs.append(
                Run(
                    label=f"{held_out}-fold{f}",
                    train_classes=base_classes + eval_classes,
                    test_classes=eval_classes,
                    train_ids=train_ids,
                    test_ids=test_ids,
                    few_shot_ids=sorted(few),
                )
            )
    return EvaluationPlan(
        setting="S4",
        runs=runs,
        seed=seed,
        description=f"setting 4: {n_folds}-fold few-shot CV over {len(names)} categories",
    )


def plan_for_setting(
    manifest: DatasetManifest,
    setting: int,
    *,
    category: str | None = None,
    seed: int = 0,
    relaxed: bool = False,
) -> EvaluationPlan:
    """Dispatch on the numeric setting selector 1-4."""
    if setting == 1:
        if category is None:
            raise ParameterError("setting 1 requires a category")
        return plan_setting1(manifest, category, seed, relaxed=relaxed)
    if category is not None:
        raise ParameterError(f"setting {setting} does not take a category")
    if setting == 2:
        return plan_setting2(manifest, relaxed=relaxed)
    if setting == 3:
        return plan_setting3(manifest, relaxed=relaxed)
    if setting == 4:
        return plan_setting4(manifest, seed, relaxed=relaxed)
    raise ParameterError(f"setting must be 1..4, got {setting}")


def _class_set_for(
    labels: Sequence[str],
    manifest: DatasetManifest,
    label_vectors: Mapping[str, np.ndarray],
    normalize: bool,
) -> ClassSet:
    items = []
    for i, label in enumerate(labels):
        if label not in label_vectors:
            raise MissingEmbeddingError(f"no composed embedding for label '{label}'")
        vec = np.asarray(label_vectors[label], dtype=np.float64)
        if normalize:
            vec = l2_normalize_rows(vec[None, :])[0]
        items.append(LabeledClass(i, label, manifest.category_of(label), vec))
    return ClassSet(items)


def _gather(
    sample_ids: Sequence[str],
    manifest_labels: Mapping[str, str],
    embeddings: Mapping[str, np.ndarray],
    classes: ClassSet,
    normalize: bool,
) -> TrainingSet:
    x = np.vstack([embeddings[sid] for sid in sample_ids])
    if normalize:
        x = l2_normalize_rows(x)
    y = np.array([classes.id_of(manifest_labels[sid]) for sid in sample_ids], dtype=np.int64)
    return TrainingSet(x, y, sample_ids=list(sample_ids))


def _execute_run(
    run: Run,
    manifest: DatasetManifest,
    embeddings: Mapping[str, np.ndarray],
    label_vectors: Mapping[str, np.ndarray],
    config: TrainingConfig,
    normalize: bool,
) -> tuple[RunResult, ConfusionMatrix]:
    labels_by_id = {r.sample_id: r.label for r in manifest.records}
    train_set_classes = _class_set_for(run.train_classes, manifest, label_vectors, normalize)
    train_set = _gather(run.train_ids, labels_by_id, embeddings, train_set_classes, normalize)
    w = train(train_set, train_set_classes, config)
    test_classes = _class_set_for(run.test_classes, manifest, label_vectors, normalize)
    test_set = _gather(run.test_ids, labels_by_id, embeddings, test_classes, normalize)
    scores = test_set.features @ w @ test_classes.phi_matrix.T
    preds = np.argmax(scores, axis=1)
    c = len(test_classes)
    counts = np.zeros((c, c), dtype=np.int64)
    for true_id, pred_id in zip(test_set.labels, preds):
        counts[true_id, pred_id] += 1
    confusion = ConfusionMatrix(test_classes.labels, counts)
    n_correct = int(np.trace(counts))
    result = RunResult(
        label=run.label,
        accuracy=100.0 * n_correct / len(test_set),
        n_test=len(test_set),
        n_correct=n_correct,
    )
    return result, confusion


def run_plan(
    plan: EvaluationPlan,
    manifest: DatasetManifest,
    embeddings: Mapping[str, np.ndarray],
    label_vectors: Mapping[str, np.ndarray],
    config: TrainingConfig,
    *,
    jobs: int = 1,
    normalize: bool = False,
) -> tuple[AccuracyReport, dict[str, ConfusionMatrix]]:
    """Train and score every run of a plan; aggregation follows plan order."""
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")

    def work(run: Run):
        try:
            return _execute_run(run, manifest, embeddings, label_vectors, config, normalize)
        except Exception as e:
            raise type(e)(f"run '{run.label}': {e}") from e

    if jobs == 1 or len(plan.runs) <= 1:
        outcomes = [work(run) for run in plan.runs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, plan.runs))
    results = [res for res, _ in outcomes]
    confusions = {res.label: conf for (res, conf) in outcomes}
    aggregate = float(np.mean([r.accuracy for r in results]))
    report = AccuracyReport(
        setting=plan.setting,
        runs=results,
        aggregate=aggregate,
        metadata={
            "description": plan.description,
            "seed": plan.seed,
            "config": config.to_dict(),
            "normalize": normalize,
            "n_runs": len(results),
        },
    )
    return report, confusions


@dataclass(frozen=True)
class SynthCorpus:
    """In-memory synthetic corpus mirroring the on-disk interchange formats.

    ``hidden_map`` is the generating matrix (audio = map @ label + noise);
    it is kept off disk and exists only so tests can score with a known
    correct alignment.
    """

    records: list[ManifestRecord]
    embeddings: dict[str, np.ndarray]
    word_table: WordVectorTable
    labels: list[tuple[str, str]]
    hidden_map: np.ndarray

    def manifest(self) -> DatasetManifest:
        dim = next(iter(self.embeddings.values())).shape[0]
        return DatasetManifest(self.records, dim)

    def write(self, out_dir) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return {
            "manifest": write_manifest(out_dir / "manifest.csv", self.records),
            "embeddings": write_embeddings(out_dir / "embeddings.jsonl", self.embeddings),
            "word_vectors": write_word_vectors(out_dir / "word_vectors.txt", self.word_table),
            "labels": write_labels_csv(out_dir / "labels.csv", self.labels),
        }


def _orthonormal_map(rng: np.random.Generator, d_x: int, d_y: int) -> np.ndarray:
    g = rng.standard_normal((d_x, d_y))
    if d_x >= d_y:
        q, _ = np.linalg.qr(g)
        return q
    q, _ = np.linalg.qr(g.T)
    return q.T


def synth_dataset(
    n_classes: int,
    samples_per_class: int,
    d_x: int,
    d_y: int,
    noise_sigma: float,
    seed: int,
) -> SynthCorpus:
    """Generate a corpus where audio embeddings are a hidden orthonormal map of
    their class embedding plus Gaussian noise, so held-out classes remain
    classifiable by a bilinear model.

    Classes are grouped into categories of 10 in id order.
    """
    if n_classes < 2:
        raise ParameterError(f"n_classes must be >= 2, got {n_classes}")
    if samples_per_class < 1:
        raise ParameterError(f"samples_per_class must be >= 1, got {samples_per_class}")
    if d_x < 2 or d_y < 2:
        raise ParameterError(f"embedding dims must be >= 2, got d_x={d_x}, d_y={d_y}")
    if noise_sigma < 0:
        raise ParameterError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if seed < 0:
        raise ParameterError(f"seed must be >= 0, got {seed}")
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((n_classes, d_y))
    hidden = _orthonormal_map(rng, d_x, d_y)
    width = max(2, len(str(n_classes - 1)))
    swidth = max(3, len(str(samples_per_class - 1)))
    labels = []
    records = []
    embeddings: dict[str, np.ndarray] = {}
    for c in range(n_classes):
        label = f"class{c:0{width}d}"
        category = f"cat{c // 10}"
        labels.append((label, category))
        for s in range(samples_per_class):
            sample_id = f"{label}-s{s:0{swidth}d}"
            theta = hidden @ phi[c] + noise_sigma * rng.standard_normal(d_x)
            embeddings[sample_id] = theta
            records.append(ManifestRecord(sample_id, label, category, sample_id))
    table = WordVectorTable(dim=d_y, vectors={lb: phi[i].copy() for i, (lb, _) in enumerate(labels)})
    return SynthCorpus(
        records=records,
        embeddings=embeddings,
        word_table=table,
        labels=labels,
        hidden_map=hidden,
    )


def _safe_filename(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", label)


def write_report(
    report: AccuracyReport,
    confusions: Mapping[str, ConfusionMatrix],
    out_dir,
    *,
    timestamp: bool = True,
) -> dict[str, Path]:
    """Write summary JSON, the per-run accuracy CSV, and one confusion CSV per run.

    Accuracies are one-decimal in CSV and full precision in the JSON summary.
    The generation timestamp lives only in the summary metadata.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metadata = dict(report.metadata)
    if timestamp:
        metadata["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    summary = {
        "setting": report.setting,
        "aggregate_accuracy": report.aggregate,
        "runs": [
            {
                "label": r.label,
                "accuracy": r.accuracy,
                "n_test": r.n_test,
                "n_correct": r.n_correct,
            }
            for r in report.runs
        ],
        "metadata": metadata,
    }
    files: dict[str, Path] = {}
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    files["summary"] = summary_path
    acc_path = out_dir / f"accuracy_{report.setting}.csv"
    with acc_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "top1_accuracy_percent"])
        for r in report.runs:
            writer.writerow([r.label, f"{r.accuracy:.1f}"])
        writer.writerow(["mean", f"{report.aggregate:.1f}"])
    files["accuracy"] = acc_path
    for label, confusion in confusions.items():
        path = out_dir / f"confusion_{_safe_filename(label)}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([""] + confusion.labels)
            for i, row_label in enumerate(confusion.labels):
                writer.writerow([row_label] + [int(v) for v in confusion.counts[i]])
        files[f"confusion_{label}"] = path
    return files
