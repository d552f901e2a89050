"""Workflow handlers shared by the HTTP service and the command-line client.

Each handler takes a request model, resolves and validates its input paths
up front, runs the corresponding core workflow, writes the outputs, and
returns a response model.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .. import embeddings as emb
from .. import evaluation as ev
from .. import model as mdl
from ..errors import DimensionError, MissingEmbeddingError, ParameterError
from . import schemas

log = logging.getLogger("zsac")


def _require_paths(*paths: str) -> None:
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"input path does not exist: {p}")


def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    corpus = ev.synth_dataset(
        req.classes, req.samples_per_class, req.audio_dim, req.label_dim, req.noise_sigma, req.seed
    )
    files = corpus.write(req.out_dir)
    log.info("synth: wrote %d samples of %d classes to %s", len(corpus.records), req.classes, req.out_dir)
    return schemas.SynthResponse(
        files={k: str(v) for k, v in files.items()},
        classes=req.classes,
        samples=len(corpus.records),
    )


def compose_labels(req: schemas.ComposeLabelsRequest) -> schemas.ComposeLabelsResponse:
    _require_paths(req.word_vectors, req.labels)
    table = emb.load_word_vectors(req.word_vectors)
    if table.duplicates:
        log.warning("word-vector table had %d duplicate tokens (last won)", table.duplicates)
    labels = emb.load_labels_csv(req.labels)
    classes = emb.compose_class_set(labels, table, req.oov_policy)
    out = emb.write_composed_labels(req.out, classes)
    log.info("compose-labels: %d classes, dim %d -> %s", len(classes), classes.label_dim, out)
    return schemas.ComposeLabelsResponse(out_path=str(out), count=len(classes), dim=classes.label_dim)


def _training_config(req) -> mdl.TrainingConfig:
    return mdl.TrainingConfig(
        eta=req.eta,
        epochs=req.epochs,
        seed=req.seed,
        sort_order=req.sort_order,
        shuffle_samples=req.shuffle,
    )


def _dataset_from_files(manifest_path, embeddings_path, classes: mdl.ClassSet, normalize: bool):
    manifest, vectors = emb.load_manifest(manifest_path, embeddings_path)
    x = np.vstack([vectors[r.embedding_id] for r in manifest.records])
    if normalize:
        x = mdl.l2_normalize_rows(x)
    y = np.array([classes.id_of(r.label) for r in manifest.records], dtype=np.int64)
    ids = [r.sample_id for r in manifest.records]
    return manifest, mdl.TrainingSet(x, y, sample_ids=ids)


def _normalized_class_set(classes: mdl.ClassSet, normalize: bool) -> mdl.ClassSet:
    if not normalize:
        return classes
    return mdl.ClassSet.from_items(
        [(c.label, c.category, mdl.l2_normalize_rows(c.embedding[None, :])[0]) for c in classes]
    )


def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    _require_paths(req.manifest, req.embeddings, req.labels)
    config = _training_config(req)
    classes = _normalized_class_set(emb.load_composed_labels(req.labels), req.normalize)
    _, dataset = _dataset_from_files(req.manifest, req.embeddings, classes, req.normalize)
    w = mdl.train(dataset, classes, config)
    risk = mdl.empirical_risk(dataset, w, classes)
    mdl.save_model(req.out, w, classes, config, normalize=req.normalize)
    log.info("train: %d samples, %d classes, final risk %.6g", len(dataset), len(classes), risk)
    return schemas.TrainResponse(
        model_path=str(req.out),
        empirical_risk=risk,
        classes=len(classes),
        audio_dim=w.shape[0],
        label_dim=w.shape[1],
    )


def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
    _require_paths(req.model, req.labels, req.embeddings)
    saved = mdl.load_model(req.model)
    normalize = bool(saved.config.get("normalize", False))
    classes = _normalized_class_set(emb.load_composed_labels(req.labels), normalize)
    if classes.label_dim != saved.w.shape[1]:
        raise DimensionError(
            f"candidate label dim {classes.label_dim} does not match model cols {saved.w.shape[1]}"
        )
    vectors = emb.load_embeddings(req.embeddings)
    ids = req.ids if req.ids else list(vectors)
    predictions = []
    for sample_id in ids:
        if sample_id not in vectors:
            raise MissingEmbeddingError(f"sample '{sample_id}' is not in the embeddings file")
        theta = vectors[sample_id]
        if theta.shape[0] != saved.w.shape[0]:
            raise DimensionError(
                f"sample '{sample_id}' has dim {theta.shape[0]}, model expects {saved.w.shape[0]}"
            )
        if normalize:
            theta = mdl.l2_normalize_rows(theta[None, :])[0]
        scores = mdl.class_scores(theta, saved.w, classes)
        best = int(np.argmax(scores))
        predictions.append(
            schemas.Prediction(sample_id=sample_id, label=classes[best].label, score=float(scores[best]))
        )
    out = Path(req.out)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "predicted_label", "score"])
        for p in predictions:
            writer.writerow([p.sample_id, p.label, format(p.score, ".17g")])
    log.info("predict: %d samples -> %s", len(predictions), out)
    return schemas.PredictResponse(out_path=str(out), predictions=predictions)


def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    if (req.labels is None) == (req.word_vectors is None):
        raise ParameterError("provide exactly one of 'labels' (composed) or 'word_vectors'")
    _require_paths(req.manifest, req.embeddings, req.labels or req.word_vectors)
    manifest, vectors = emb.load_manifest(req.manifest, req.embeddings)
    if req.labels is not None:
        composed = emb.load_composed_labels(req.labels)
        label_vectors = {c.label: c.embedding for c in composed}
    else:
        table = emb.load_word_vectors(req.word_vectors)
        composed = emb.compose_class_set(manifest.class_labels, table, req.oov_policy)
        label_vectors = {c.label: c.embedding for c in composed}
    plan = ev.plan_for_setting(
        manifest, req.setting, category=req.category, seed=req.seed, relaxed=req.relaxed
    )
    config = _training_config(req)
    report, confusions = ev.run_plan(
        plan,
        manifest,
        vectors,
        label_vectors,
        config,
        jobs=req.jobs,
        normalize=req.normalize,
    )
    files = ev.write_report(report, confusions, req.out_dir)
    log.info(
        "evaluate: %s, %d runs, aggregate %.2f%%", report.setting, len(report.runs), report.aggregate
    )
    return schemas.EvaluateResponse(
        setting=report.setting,
        aggregate_accuracy=report.aggregate,
        runs=[
            schemas.RunAccuracy(
                label=r.label, accuracy=r.accuracy, n_test=r.n_test, n_correct=r.n_correct
            )
            for r in report.runs
        ],
        files={k: str(v) for k, v in files.items()},
    )
