"""Bilinear compatibility model trained with rank-weighted hinge SGD.

An audio clip is represented by a feature embedding ``theta`` and a class by
a label embedding ``phi``; both are 1-D float64 arrays. The model is a single
parameter matrix ``w`` of shape ``(audio_dim, label_dim)`` scoring a pair as
``theta @ w @ phi``. Training starts from the zero matrix and, per sample,
ranks the margin losses of all candidate classes and applies a harmonically
weighted update for every violating class.

All scoring operations are pure; ``train`` owns and returns the matrix it
builds. Accumulation is double precision throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .errors import (
    ClassIndexError,
    DimensionError,
    DuplicateLabelError,
    EmptyClassSetError,
    EmptyDatasetError,
    InsufficientClassesError,
    ParameterError,
    ParseError,
)

SORT_ORDERS = ("descending", "ascending")


def as_embedding(values, *, dim: int | None = None, name: str = "embedding") -> np.ndarray:
    """Validate and return a finite 1-D float64 embedding vector."""
    vec = np.ascontiguousarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionError(f"{name} has dim {vec.shape[0]}, expected {dim}")
    return vec


def as_matrix(values, *, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-D float64 parameter matrix."""
    mat = np.ascontiguousarray(values, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise DimensionError(f"{name} must be 2-D and non-empty, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} contains non-finite values")
    return mat


@dataclass(frozen=True)
class LabeledClass:
    """One class: positional id, original label text, category, embedding."""

    class_id: int
    label: str
    category: str
    embedding: np.ndarray


class ClassSet:
    """Ordered, immutable collection of classes sharing one embedding dim."""

    def __init__(self, classes: Sequence[LabeledClass]):
        if not classes:
            raise EmptyClassSetError("class set is empty")
        ids = [c.class_id for c in classes]
        if ids != list(range(len(classes))):
            raise ClassIndexError(f"class ids must be 0..{len(classes) - 1} in order, got {ids}")
        labels = [c.label for c in classes]
        if len(set(labels)) != len(labels):
            raise DuplicateLabelError("class labels must be unique within a class set")
        embeddings = [as_embedding(c.embedding, name=f"embedding of '{c.label}'") for c in classes]
        dims = {e.shape[0] for e in embeddings}
        if len(dims) != 1:
            raise DimensionError(f"class embeddings have mixed dims {sorted(dims)}")
        self._classes = tuple(classes)
        self._phi = np.ascontiguousarray(np.vstack(embeddings))
        self._id_by_label = {c.label: c.class_id for c in classes}

    @classmethod
    def from_items(cls, items: Sequence[tuple[str, str, np.ndarray]]) -> "ClassSet":
        """Build from (label, category, embedding) triples; ids follow input order."""
        return cls([LabeledClass(i, lb, cat, emb) for i, (lb, cat, emb) in enumerate(items)])

    def __len__(self) -> int:
        return len(self._classes)

    def __iter__(self):
        return iter(self._classes)

    def __getitem__(self, class_id: int) -> LabeledClass:
        self.check_id(class_id)
        return self._classes[class_id]

    @property
    def label_dim(self) -> int:
        return self._phi.shape[1]

    @property
    def phi_matrix(self) -> np.ndarray:
        """(C, label_dim) matrix of class embeddings; treat as read-only."""
        return self._phi

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self._classes]

    def id_of(self, label: str) -> int:
        try:
            return self._id_by_label[label]
        except KeyError:
            raise ClassIndexError(f"label '{label}' is not in the class set") from None

    def check_id(self, class_id: int, name: str = "class_id") -> None:
        if not 0 <= class_id < len(self._classes):
            raise ClassIndexError(f"{name}={class_id} outside valid range 0..{len(self._classes) - 1}")


class TrainingSet:
    """Sample matrix paired with true class ids (and optional sample ids)."""

    def __init__(self, features, labels, sample_ids: Sequence[str] | None = None):
        x = np.ascontiguousarray(features, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"features must be 2-D (n_samples, audio_dim), got shape {x.shape}")
        if x.shape[0] == 0:
            raise EmptyDatasetError("training set has no samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        y = np.ascontiguousarray(labels, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DimensionError(f"labels shape {y.shape} does not match {x.shape[0]} samples")
        if sample_ids is not None and len(sample_ids) != x.shape[0]:
            raise DimensionError("sample_ids length does not match number of samples")
        self.features = x
        self.labels = y
        self.sample_ids = list(sample_ids) if sample_ids is not None else None

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def audio_dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class TrainingConfig:
    """SGD hyperparameters. ``epochs=0`` is the identity run (zero matrix)."""

    eta: float = 0.01
    epochs: int = 50
    seed: int = 0
    sort_order: str = "descending"
    shuffle_samples: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ParameterError(f"eta must be > 0, got {self.eta}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        if self.sort_order not in SORT_ORDERS:
            raise ParameterError(f"sort_order must be one of {SORT_ORDERS}, got '{self.sort_order}'")

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "epochs": self.epochs,
            "seed": self.seed,
            "sort_order": self.sort_order,
            "shuffle_samples": self.shuffle_samples,
        }


def _check_theta(theta: np.ndarray, w: np.ndarray) -> None:
    if theta.shape[0] != w.shape[0]:
        raise DimensionError(
            f"audio embedding dim {theta.shape[0]} does not match matrix rows {w.shape[0]}"
        )


def _check_phi_dim(dim: int, w: np.ndarray) -> None:
    if dim != w.shape[1]:
        raise DimensionError(f"label embedding dim {dim} does not match matrix cols {w.shape[1]}")


def compatibility(theta, w, phi) -> float:
    """Bilinear score ``theta @ w @ phi`` of an audio/class embedding pair."""
    theta = as_embedding(theta, name="theta")
    phi = as_embedding(phi, name="phi")
    w = as_matrix(w)
    _check_theta(theta, w)
    _check_phi_dim(phi.shape[0], w)
    return float(theta @ w @ phi)


def class_scores(theta, w, classes: ClassSet) -> np.ndarray:
    """Compatibility of one audio embedding against every class, in id order."""
    theta = as_embedding(theta, name="theta")
    w = as_matrix(w)
    _check_theta(theta, w)
    _check_phi_dim(classes.label_dim, w)
    return classes.phi_matrix @ (theta @ w)


def predict(theta, w, classes: ClassSet) -> int:
    """Class id with the highest compatibility; ties go to the smallest id."""
    scores = class_scores(theta, w, classes)
    return int(np.argmax(scores))


def predict_many(features, w, classes: ClassSet) -> np.ndarray:
    """Row-wise ``predict`` over a (n_samples, audio_dim) matrix."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"features must be 2-D, got shape {x.shape}")
    w = as_matrix(w)
    if x.shape[1] != w.shape[0]:
        raise DimensionError(f"audio embedding dim {x.shape[1]} does not match matrix rows {w.shape[0]}")
    _check_phi_dim(classes.label_dim, w)
    scores = x @ w @ classes.phi_matrix.T
    return np.argmax(scores, axis=1)


def margin_loss(theta, y_true: int, y: int, w, classes: ClassSet) -> float:
    """Hinge-style loss: 0/1 misclassification indicator plus score difference.

    Exactly 0 when ``y == y_true`` regardless of the matrix.
    """
    classes.check_id(y_true, "y_true")
    classes.check_id(y, "y")
    if y == y_true:
        return 0.0
    delta = 1.0
    f_y = compatibility(theta, w, classes[y].embedding)
    f_true = compatibility(theta, w, classes[y_true].embedding)
    return delta + f_y - f_true


def rank_penalty(r: int) -> float:
    """Partial harmonic sum 1 + 1/2 + ... + 1/r; 0 for r = 0."""
    if r < 0:
        raise ValueError(f"rank must be >= 0, got {r}")
    total = 0.0
    for j in range(1, r + 1):
        total += 1.0 / j
    return total


def harmonic_table(n: int) -> np.ndarray:
    """Vector of partial harmonic sums for ranks 0..n."""
    table = np.zeros(n + 1)
    for j in range(1, n + 1):
        table[j] = table[j - 1] + 1.0 / j
    return table


def violation_rank(theta, y_true: int, w, classes: ClassSet) -> int:
    """Number of wrong classes whose margin loss is positive.

    0 means the correct class outranks every other class by the full margin.
    """
    classes.check_id(y_true, "y_true")
    scores = class_scores(theta, w, classes)
    losses = scores - scores[y_true] + 1.0
    losses[y_true] = 0.0
    return int(np.count_nonzero(losses > 0.0))


def empirical_risk(dataset: TrainingSet, w, classes: ClassSet) -> float:
    """Mean rank-weighted hinge loss over the dataset.

    Per sample the inner hinge sum is scaled by ``penalty(rank) / rank``; a
    sample with rank 0 contributes exactly 0 (the 0/0 convention).
    """
    w = as_matrix(w)
    _check_dataset(dataset, w, classes)
    n = len(dataset)
    c = len(classes)
    scores = dataset.features @ w @ classes.phi_matrix.T
    rows = np.arange(n)
    losses = scores - scores[rows, dataset.labels][:, None] + 1.0
    losses[rows, dataset.labels] = 0.0
    ranks = np.count_nonzero(losses > 0.0, axis=1)
    hinge = np.where(losses > 0.0, losses, 0.0).sum(axis=1)
    table = harmonic_table(c)
    weights = np.where(ranks > 0, table[ranks] / np.maximum(ranks, 1), 0.0)
    return float(np.mean(weights * hinge))


def loss_gradient(theta, y_true: int, y: int, classes: ClassSet) -> np.ndarray:
    """Gradient of the margin loss in the matrix: outer(theta, phi[y] - phi[y_true])."""
    classes.check_id(y_true, "y_true")
    classes.check_id(y, "y")
    theta = as_embedding(theta, name="theta")
    return np.outer(theta, classes[y].embedding - classes[y_true].embedding)


def _check_dataset(dataset: TrainingSet, w: np.ndarray | None, classes: ClassSet) -> None:
    if w is not None and dataset.audio_dim != w.shape[0]:
        raise DimensionError(
            f"dataset audio dim {dataset.audio_dim} does not match matrix rows {w.shape[0]}"
        )
    if w is not None:
        _check_phi_dim(classes.label_dim, w)
    bad = (dataset.labels < 0) | (dataset.labels >= len(classes))
    if np.any(bad):
        first = int(dataset.labels[np.argmax(bad)])
        raise ClassIndexError(f"sample class id {first} outside valid range 0..{len(classes) - 1}")


@njit(cache=True, nogil=True)
def _rank_weighted_sgd(w, x, y, phi, penalties, eta, orders, descending):  # pragma: no cover
    n_classes = phi.shape[0]
    top = n_classes - 1
    d_y = phi.shape[1]
    for e in range(orders.shape[0]):
        for k in range(orders.shape[1]):
            i = orders[e, k]
            theta = x[i]
            target = y[i]
            scores = np.dot(phi, np.dot(theta, w))
            losses = scores - scores[target] + 1.0
            losses[target] = 0.0
            any_positive = False
            for c in range(n_classes):
                if losses[c] > 0.0:
                    any_positive = True
                    break
            if not any_positive:
                continue
            if descending:
                order = np.argsort(-losses, kind="mergesort")
            else:
                order = np.argsort(losses, kind="mergesort")
            # Losses are frozen per sample, so the sequential rank updates
            # collapse into a single combined direction.
            dphi = np.zeros(d_y)
            for r0 in range(n_classes):
                c = order[r0]
                if losses[c] > 0.0:
                    weight = penalties[top // (r0 + 1)]
                    for b in range(d_y):
                        dphi[b] += weight * (phi[c, b] - phi[target, b])
            for a in range(w.shape[0]):
                step = eta * theta[a]
                for b in range(d_y):
                    w[a, b] -= step * dphi[b]


def _epoch_orders(n_samples: int, config: TrainingConfig) -> np.ndarray:
    if not config.shuffle_samples:
        return np.tile(np.arange(n_samples, dtype=np.int64), (config.epochs, 1))
    rng = np.random.default_rng(config.seed)
    return np.vstack(
        [rng.permutation(n_samples) for _ in range(config.epochs)]
    ).astype(np.int64)


def train(dataset: TrainingSet, classes: ClassSet, config: TrainingConfig) -> np.ndarray:
    """Learn the compatibility matrix by per-sample rank-weighted SGD.

    Starts from the zero matrix. For every sample: score all candidate
    classes against the current matrix, sort the margin losses (default
    descending, ties by ascending class id), then walk the sorted list and
    subtract ``eta * penalty((C-1) // rank) * outer(theta, phi[y] - phi[y_true])``
    for every entry with positive loss. Deterministic given the dataset
    order and config.
    """
    if len(classes) < 2:
        raise InsufficientClassesError(f"training needs at least 2 classes, got {len(classes)}")
    _check_dataset(dataset, None, classes)
    w = np.zeros((dataset.audio_dim, classes.label_dim))
    if config.epochs == 0:
        return w
    orders = _epoch_orders(len(dataset), config)
    penalties = harmonic_table(len(classes))
    _rank_weighted_sgd(
        w,
        dataset.features,
        dataset.labels,
        classes.phi_matrix,
        penalties,
        config.eta,
        orders,
        config.sort_order == "descending",
    )
    if not np.all(np.isfinite(w)):
        raise ValueError("training diverged: matrix contains non-finite values; lower eta")
    return w


@dataclass(frozen=True)
class SavedModel:
    """Deserialized model file: matrix, class metadata, training config."""

    w: np.ndarray
    class_meta: list[dict]
    config: dict


def save_model(
    path,
    w: np.ndarray,
    classes: ClassSet,
    config: TrainingConfig,
    *,
    normalize: bool = False,
) -> Path:
    """Write the model as JSON with row-major matrix entries."""
    w = as_matrix(w)
    _check_phi_dim(classes.label_dim, w)
    payload = {
        "d_x": int(w.shape[0]),
        "d_y": int(w.shape[1]),
        "w": [float(v) for v in w.ravel(order="C")],
        "classes": [
            {"id": c.class_id, "label": c.label, "category": c.category} for c in classes
        ],
        "config": {**config.to_dict(), "normalize": normalize},
    }
    path = Path(path)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def load_model(path) -> SavedModel:
    """Read a model JSON file back; raises ParseError on structural problems."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: not valid JSON: {e}") from e
    try:
        d_x = int(payload["d_x"])
        d_y = int(payload["d_y"])
        flat = payload["w"]
        class_meta = payload["classes"]
        config = payload["config"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"{path}: missing or malformed model field: {e}") from e
    if not isinstance(flat, list) or len(flat) != d_x * d_y:
        raise ParseError(f"{path}: matrix has {len(flat)} entries, expected {d_x * d_y}")
    w = np.asarray(flat, dtype=np.float64).reshape(d_x, d_y)
    if not np.all(np.isfinite(w)):
        raise ParseError(f"{path}: matrix contains non-finite values")
    ids = [m.get("id") for m in class_meta]
    if ids != list(range(len(class_meta))):
        raise ParseError(f"{path}: class ids must be 0..{len(class_meta) - 1} in order")
    return SavedModel(w=w, class_meta=list(class_meta), config=dict(config))


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; all-zero rows are returned unchanged."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms = np.where(norms == 0.0, 1.0, norms)
    return m / norms
