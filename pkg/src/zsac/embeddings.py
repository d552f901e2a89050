"""Word-vector tables, label-embedding composition, and dataset file IO.

File formats handled here:

* word-vector table: UTF-8 text, optional first line ``<count> <dim>``, then
  one ``<token> <v1> ... <v_dim>`` line per entry;
* embeddings file: JSONL, each line ``{"id": ..., "frames": [[...], ...]}``
  (one vector per one-second segment, averaged on load) or
  ``{"id": ..., "embedding": [...]}`` (pre-aggregated);
* manifest: CSV with header ``sample_id,label,category,embedding_id``;
* composed labels: JSONL ``{"id", "label", "category", "embedding"}``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    DuplicateLabelError,
    EmptyCompositionError,
    EmptyFramesError,
    EmptyTableError,
    MissingEmbeddingError,
    OovError,
    ParseError,
)
from .model import ClassSet, LabeledClass, as_embedding

MANIFEST_HEADER = ["sample_id", "label", "category", "embedding_id"]
LABELS_HEADER = ["label", "category"]

_TOKEN_SPLIT = re.compile(r"[\s_]+")

# 17 significant digits round-trip any float64 exactly.
_FLOAT_FMT = ".17g"


@dataclass(frozen=True)
class WordVectorTable:
    """Token -> vector lookup with a fixed dimension.

    ``duplicates`` counts input lines that were overridden by a later
    occurrence of the same token (last one wins on load).
    """

    dim: int
    vectors: dict[str, np.ndarray]
    duplicates: int = 0

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray:
        try:
            return self.vectors[token]
        except KeyError:
            raise OovError(f"token '{token}' is not in the word-vector table") from None


def load_word_vectors(path, expected_dim: int | None = None) -> WordVectorTable:
    """Parse a text word-vector table; blank lines are skipped."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    vectors: dict[str, np.ndarray] = {}
    duplicates = 0
    dim = expected_dim
    header_count = None
    data_lines = 0
    first_data_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if not first_data_seen and header_count is None and len(parts) == 2:
            try:
                header_count = int(parts[0])
                header_dim = int(parts[1])
            except ValueError:
                pass
            else:
                if expected_dim is not None and header_dim != expected_dim:
                    raise DimensionError(
                        f"{path}:{lineno}: header declares dim {header_dim}, expected {expected_dim}"
                    )
                dim = header_dim
                continue
        first_data_seen = True
        data_lines += 1
        token = parts[0]
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError as e:
            raise ParseError(f"{path}:{lineno}: malformed vector value: {e}") from e
        if not values:
            raise ParseError(f"{path}:{lineno}: token '{token}' has no vector values")
        if any(not np.isfinite(v) for v in values):
            raise ParseError(f"{path}:{lineno}: non-finite vector value")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimensionError(f"{path}:{lineno}: vector has dim {len(values)}, expected {dim}")
        if token in vectors:
            duplicates += 1
        vectors[token] = np.asarray(values, dtype=np.float64)
    if not vectors:
        raise EmptyTableError(f"{path}: word-vector table has no entries")
    if header_count is not None and header_count != data_lines:
        raise ParseError(f"{path}: header declares {header_count} entries, found {data_lines}")
    return WordVectorTable(dim=int(dim), vectors=vectors, duplicates=duplicates)


def write_word_vectors(path, table: WordVectorTable, *, header: bool = True) -> Path:
    """Write a table in the text format with full round-trip float precision."""
    path = Path(path)
    out = []
    if header:
        out.append(f"{len(table.vectors)} {table.dim}")
    for token, vec in table.vectors.items():
        out.append(token + " " + " ".join(format(v, _FLOAT_FMT) for v in vec))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def tokenize_label(label_text: str) -> list[str]:
    """Lowercase a label and split it on whitespace and underscore runs."""
    return [t for t in _TOKEN_SPLIT.split(label_text.strip().lower()) if t]


def compose_label_embedding(
    label_text: str, table: WordVectorTable, oov_policy: str = "error"
) -> np.ndarray:
    """Mean of the word vectors of a label's tokens.

    A single-token label returns that token's vector exactly. Under the
    ``skip`` policy missing tokens are dropped from the mean; a label whose
    tokens are all missing is an error under either policy.
    """
    if oov_policy not in ("error", "skip"):
        raise ValueError(f"oov_policy must be 'error' or 'skip', got '{oov_policy}'")
    tokens = tokenize_label(label_text)
    if not tokens:
        raise EmptyCompositionError(f"label '{label_text}' has no tokens")
    found = []
    for token in tokens:
        if token in table:
            found.append(table.get(token))
        elif oov_policy == "error":
            raise OovError(f"token '{token}' is not in the word-vector table")
    if not found:
        raise EmptyCompositionError(f"label '{label_text}': no token found in the word-vector table")
    if len(found) == 1:
        return found[0].copy()
    return np.mean(np.vstack(found), axis=0)


def compose_class_set(
    labels: Sequence[tuple[str, str]], table: WordVectorTable, oov_policy: str = "error"
) -> ClassSet:
    """Compose one embedding per (label, category) pair; ids follow input order."""
    if not labels:
        raise EmptyCompositionError("label list is empty")
    seen = set()
    classes = []
    for i, (label, category) in enumerate(labels):
        if label in seen:
            raise DuplicateLabelError(f"label '{label}' occurs more than once")
        seen.add(label)
        try:
            emb = compose_label_embedding(label, table, oov_policy)
        except (OovError, EmptyCompositionError) as e:
            raise type(e)(f"label '{label}': {e}") from e
        classes.append(LabeledClass(i, label, category, emb))
    return ClassSet(classes)


def aggregate_frames(frames) -> np.ndarray:
    """Elementwise mean over a non-empty sequence of equal-length frame vectors."""
    frames = list(frames)
    if not frames:
        raise EmptyFramesError("cannot aggregate an empty frame sequence")
    vecs = [as_embedding(f, name="frame") for f in frames]
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise DimensionError(f"frames have mixed dims {sorted(dims)}")
    return np.mean(np.vstack(vecs), axis=0)


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: str
    label: str
    category: str
    embedding_id: str


class DatasetManifest:
    """Ordered sample records plus the audio embedding dimension."""

    def __init__(self, records: Sequence[ManifestRecord], audio_dim: int):
        ids = [r.sample_id for r in records]
        if len(set(ids)) != len(ids):
            raise ParseError("manifest sample_ids are not unique")
        label_cat: dict[str, str] = {}
        for r in records:
            prev = label_cat.setdefault(r.label, r.category)
            if prev != r.category:
                raise ParseError(
                    f"label '{r.label}' maps to both categories '{prev}' and '{r.category}'"
                )
        self.records = tuple(records)
        self.audio_dim = int(audio_dim)
        self._label_category = label_cat

    def __len__(self) -> int:
        return len(self.records)

    @property
    def class_labels(self) -> list[tuple[str, str]]:
        """(label, category) pairs in first-appearance order."""
        seen = []
        seen_set = set()
        for r in self.records:
            if r.label not in seen_set:
                seen_set.add(r.label)
                seen.append((r.label, r.category))
        return seen

    def category_of(self, label: str) -> str:
        return self._label_category[label]

    def classes_by_category(self) -> dict[str, list[str]]:
        """Category -> class labels, both in first-appearance order."""
        out: dict[str, list[str]] = {}
        for label, category in self.class_labels:
            out.setdefault(category, []).append(label)
        return out

    def ids_by_label(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for r in self.records:
            out.setdefault(r.label, []).append(r.sample_id)
        return out


def load_embeddings(path) -> dict[str, np.ndarray]:
    """Read an embeddings JSONL file; frame-form entries are averaged."""
    path = Path(path)
    out: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: not valid JSON: {e}") from e
            if not isinstance(entry, dict) or "id" not in entry:
                raise ParseError(f"{path}:{lineno}: entry must be an object with an 'id' field")
            sample_id = str(entry["id"])
            if sample_id in out:
                raise ParseError(f"{path}:{lineno}: duplicate embedding id '{sample_id}'")
            if "frames" in entry:
                try:
                    vec = aggregate_frames(entry["frames"])
                except (EmptyFramesError, DimensionError) as e:
                    raise type(e)(f"{path}:{lineno}: {e}") from e
            elif "embedding" in entry:
                vec = as_embedding(entry["embedding"], name=f"embedding '{sample_id}'")
            else:
                raise ParseError(f"{path}:{lineno}: entry needs a 'frames' or 'embedding' field")
            out[sample_id] = vec
    if not out:
        raise ParseError(f"{path}: embeddings file has no entries")
    return out


def write_embeddings(path, entries: Mapping[str, np.ndarray]) -> Path:
    """Write pre-aggregated embeddings as JSONL, one id per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample_id, vec in entries.items():
            fh.write(json.dumps({"id": sample_id, "embedding": [float(v) for v in vec]}) + "\n")
    return path


def load_manifest(manifest_path, embeddings_path) -> tuple[DatasetManifest, dict[str, np.ndarray]]:
    """Read a manifest CSV and its embeddings file, validating cross-references."""
    manifest_path = Path(manifest_path)
    embeddings = load_embeddings(embeddings_path)
    records = []
    with manifest_path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{manifest_path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ParseError(
                f"{manifest_path}:1: header must be '{','.join(MANIFEST_HEADER)}', got '{','.join(header)}'"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{manifest_path}:{lineno}: expected 4 fields, got {len(row)}")
            if any(not field.strip() for field in row):
                raise ParseError(f"{manifest_path}:{lineno}: empty field")
            records.append(ManifestRecord(*[field.strip() for field in row]))
    if not records:
        raise ParseError(f"{manifest_path}: manifest has no records")
    dim = None
    for r in records:
        if r.embedding_id not in embeddings:
            raise MissingEmbeddingError(
                f"sample '{r.sample_id}' references missing embedding '{r.embedding_id}'"
            )
        vec = embeddings[r.embedding_id]
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionError(
                f"embedding '{r.embedding_id}' has dim {vec.shape[0]}, expected {dim}"
            )
    return DatasetManifest(records, dim), embeddings


def write_manifest(path, records: Sequence[ManifestRecord]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in records:
            writer.writerow([r.sample_id, r.label, r.category, r.embedding_id])
    return path


def load_labels_csv(path) -> list[tuple[str, str]]:
    """Read a label list CSV with header ``label,category``."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty label list") from None
        if header != LABELS_HEADER:
            raise ParseError(
                f"{path}:1: header must be '{','.join(LABELS_HEADER)}', got '{','.join(header)}'"
            )
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip():
                raise ParseError(f"{path}:{lineno}: expected 'label,category'")
            labels.append((row[0].strip(), row[1].strip()))
    return labels


def write_labels_csv(path, labels: Sequence[tuple[str, str]]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABELS_HEADER)
        for label, category in labels:
            writer.writerow([label, category])
    return path


def write_composed_labels(path, classes: ClassSet) -> Path:
    """Write composed class embeddings as JSONL in class-id order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for c in classes:
            fh.write(
                json.dumps(
                    {
                        "id": c.class_id,
                        "label": c.label,
                        "category": c.category,
                        "embedding": [float(v) for v in c.embedding],
                    }
                )
                + "\n"
            )
    return path


def load_composed_labels(path) -> ClassSet:
    """Read a composed-labels JSONL file back into a class set."""
    path = Path(path)
    items = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: not valid JSON: {e}") from e
            try:
                items.append(
                    LabeledClass(
                        int(entry["id"]),
                        str(entry["label"]),
                        str(entry["category"]),
                        as_embedding(entry["embedding"], name=f"embedding of '{entry['label']}'"),
                    )
                )
            except (KeyError, TypeError) as e:
                raise ParseError(f"{path}:{lineno}: malformed composed-label entry: {e}") from e
    if not items:
        raise ParseError(f"{path}: composed-labels file has no entries")
    return ClassSet(items)
