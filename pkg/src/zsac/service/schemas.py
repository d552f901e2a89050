"""Request/response models for the zsac service endpoints."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SynthRequest(BaseModel):
    out_dir: str
    classes: int = 50
    samples_per_class: int = 40
    audio_dim: int = 16
    label_dim: int = 16
    noise_sigma: float = 0.05
    seed: int = 0


class SynthResponse(BaseModel):
    files: dict[str, str]
    classes: int
    samples: int


class ComposeLabelsRequest(BaseModel):
    word_vectors: str
    labels: str
    out: str
    oov_policy: str = "error"


class ComposeLabelsResponse(BaseModel):
    out_path: str
    count: int
    dim: int


class TrainRequest(BaseModel):
    manifest: str
    embeddings: str
    labels: str
    out: str
    eta: float = 0.01
    epochs: int = 50
    seed: int = 0
    sort_order: str = "descending"
    shuffle: bool = False
    normalize: bool = False


class TrainResponse(BaseModel):
    model_path: str
    empirical_risk: float
    classes: int
    audio_dim: int
    label_dim: int


class PredictRequest(BaseModel):
    model: str
    labels: str
    embeddings: str
    out: str
    ids: list[str] | None = None


class Prediction(BaseModel):
    sample_id: str
    label: str
    score: float


class PredictResponse(BaseModel):
    out_path: str
    predictions: list[Prediction]


class EvaluateRequest(BaseModel):
    manifest: str
    embeddings: str
    out_dir: str
    setting: int = Field(ge=1, le=4)
    word_vectors: str | None = None
    labels: str | None = None
    category: str | None = None
    oov_policy: str = "error"
    seed: int = 0
    eta: float = 0.01
    epochs: int = 50
    sort_order: str = "descending"
    shuffle: bool = False
    normalize: bool = False
    relaxed: bool = False
    jobs: int = 1


class RunAccuracy(BaseModel):
    label: str
    accuracy: float
    n_test: int
    n_correct: int


class EvaluateResponse(BaseModel):
    setting: str
    aggregate_accuracy: float
    runs: list[RunAccuracy]
    files: dict[str, str]
