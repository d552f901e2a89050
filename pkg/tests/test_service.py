from __future__ import annotations

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from zsac.model import load_model
from zsac.service.app import app

client = TestClient(app, raise_server_exceptions=False)


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    resp = client.post(
        "/synth",
        json={
            "out_dir": str(out),
            "classes": 6,
            "samples_per_class": 5,
            "audio_dim": 8,
            "label_dim": 8,
            "noise_sigma": 0.05,
            "seed": 12,
        },
    )
    assert resp.status_code == 200, resp.text
    return out, resp.json()["files"]


@pytest.fixture(scope="module")
def composed(corpus_dir):
    out, files = corpus_dir
    resp = client.post(
        "/compose-labels",
        json={
            "word_vectors": files["word_vectors"],
            "labels": files["labels"],
            "out": str(out / "composed.jsonl"),
        },
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["count"] == 6 and body["dim"] == 8
    return body["out_path"]


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_synth_writes_all_files(corpus_dir):
    _, files = corpus_dir
    assert set(files) == {"manifest", "embeddings", "word_vectors", "labels"}


def test_synth_request_defaults_are_esc50_shaped():
    from zsac.service.schemas import SynthRequest

    req = SynthRequest(out_dir="ignored")
    assert req.classes == 50
    assert req.samples_per_class == 40


def test_train_and_predict_flow(corpus_dir, composed):
    out, files = corpus_dir
    model_path = str(out / "model.json")
    resp = client.post(
        "/train",
        json={
            "manifest": files["manifest"],
            "embeddings": files["embeddings"],
            "labels": composed,
            "out": model_path,
            "epochs": 10,
            "seed": 1,
        },
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["empirical_risk"] >= 0.0
    assert body["classes"] == 6
    saved = load_model(model_path)
    assert saved.w.shape == (8, 8)

    resp = client.post(
        "/predict",
        json={
            "model": model_path,
            "labels": composed,
            "embeddings": files["embeddings"],
            "out": str(out / "pred.csv"),
            "ids": ["class00-s000", "class03-s002"],
        },
    )
    assert resp.status_code == 200, resp.text
    preds = resp.json()["predictions"]
    assert [p["sample_id"] for p in preds] == ["class00-s000", "class03-s002"]
    header = (out / "pred.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "sample_id,predicted_label,score"


def test_predict_zero_epoch_model_picks_first_candidate(corpus_dir, composed):
    out, files = corpus_dir
    model_path = str(out / "zero.json")
    resp = client.post(
        "/train",
        json={
            "manifest": files["manifest"],
            "embeddings": files["embeddings"],
            "labels": composed,
            "out": model_path,
            "epochs": 0,
        },
    )
    assert resp.status_code == 200
    saved = load_model(model_path)
    assert not saved.w.any()
    resp = client.post(
        "/predict",
        json={
            "model": model_path,
            "labels": composed,
            "embeddings": files["embeddings"],
            "out": str(out / "zero_pred.csv"),
        },
    )
    assert resp.status_code == 200
    assert all(p["label"] == "class00" for p in resp.json()["predictions"])


def test_evaluate_relaxed_setting1(corpus_dir, composed):
    out, files = corpus_dir
    resp = client.post(
        "/evaluate",
        json={
            "manifest": files["manifest"],
            "embeddings": files["embeddings"],
            "labels": composed,
            "out_dir": str(out / "report"),
            "setting": 1,
            "category": "cat0",
            "relaxed": True,
            "epochs": 10,
            "seed": 5,
        },
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["setting"] == "S1"
    assert len(body["runs"]) == 3
    summary = json.loads((out / "report" / "summary.json").read_text(encoding="utf-8"))
    assert summary["aggregate_accuracy"] == body["aggregate_accuracy"]


def test_evaluate_strict_shape_violation_is_400(corpus_dir, composed):
    out, files = corpus_dir
    resp = client.post(
        "/evaluate",
        json={
            "manifest": files["manifest"],
            "embeddings": files["embeddings"],
            "labels": composed,
            "out_dir": str(out / "r2"),
            "setting": 3,
        },
    )
    assert resp.status_code == 400
    assert resp.json()["error"] == "ProtocolError"


def test_missing_input_file_is_404(tmp_path):
    resp = client.post(
        "/compose-labels",
        json={"word_vectors": str(tmp_path / "nope.txt"), "labels": str(tmp_path / "l.csv"), "out": "x"},
    )
    assert resp.status_code == 404


def test_bad_parameters_are_422(tmp_path):
    resp = client.post("/synth", json={"out_dir": str(tmp_path), "classes": 1})
    assert resp.status_code == 422
    assert resp.json()["error"] == "ParameterError"
    resp = client.post(
        "/evaluate",
        json={
            "manifest": "m",
            "embeddings": "e",
            "out_dir": "o",
            "setting": 7,
        },
    )
    assert resp.status_code == 422  # pydantic range check


def test_oov_error_is_400(corpus_dir, tmp_path):
    out, files = corpus_dir
    labels = tmp_path / "labels.csv"
    labels.write_text("label,category\nunknown token,cat0\n", encoding="utf-8")
    resp = client.post(
        "/compose-labels",
        json={
            "word_vectors": files["word_vectors"],
            "labels": str(labels),
            "out": str(tmp_path / "c.jsonl"),
        },
    )
    assert resp.status_code == 400
    assert resp.json()["error"] == "OovError"
    assert "unknown" in resp.json()["detail"]
