from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zsac.embeddings import (
    DatasetManifest,
    ManifestRecord,
    WordVectorTable,
    aggregate_frames,
    compose_class_set,
    compose_label_embedding,
    load_composed_labels,
    load_embeddings,
    load_labels_csv,
    load_manifest,
    load_word_vectors,
    tokenize_label,
    write_composed_labels,
    write_embeddings,
    write_labels_csv,
    write_manifest,
    write_word_vectors,
)
from zsac.errors import (
    DimensionError,
    DuplicateLabelError,
    EmptyCompositionError,
    EmptyFramesError,
    EmptyTableError,
    MissingEmbeddingError,
    OovError,
    ParseError,
)

# ESC-50 class names by category; labels mix single- and multi-token forms.
ANIMAL_LABELS = ["dog", "rooster", "pig", "cow", "frog", "cat", "hen", "insects", "sheep", "crow"]
ESC50_LABELS = {
    "Animals": ANIMAL_LABELS,
    "Natural": [
        "rain", "sea waves", "crackling fire", "crickets", "chirping birds",
        "water drops", "wind", "pouring water", "toilet flush", "thunderstorm",
    ],
    "Human": [
        "crying baby", "sneezing", "clapping", "breathing", "coughing",
        "footsteps", "laughing", "brushing teeth", "snoring", "drinking sipping",
    ],
    "Interior": [
        "door wood knock", "mouse click", "keyboard typing", "door wood creaks",
        "can opening", "washing machine", "vacuum cleaner", "clock alarm",
        "clock tick", "glass breaking",
    ],
    "Exterior": [
        "helicopter", "chainsaw", "siren", "car horn", "engine",
        "train", "church bells", "airplane", "fireworks", "hand saw",
    ],
}


def small_table() -> WordVectorTable:
    return WordVectorTable(
        dim=2,
        vectors={
            "dog": np.array([1.0, 0.0]),
            "cat": np.array([0.0, 1.0]),
            "sea": np.array([1.0, 0.0]),
            "waves": np.array([0.0, 1.0]),
        },
    )


# --- word-vector table loading ------------------------------------------------


def test_load_word_vectors_basic(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("dog 1.0 0.0\ncat 0.0 1.0\n", encoding="utf-8")
    table = load_word_vectors(path)
    assert len(table) == 2
    assert table.dim == 2
    assert np.array_equal(table.get("dog"), [1.0, 0.0])


def test_load_word_vectors_with_header_validates_counts(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("2 3\na 1 2 3\nb 4 5 6\n", encoding="utf-8")
    table = load_word_vectors(path)
    assert table.dim == 3 and len(table) == 2

    path.write_text("3 3\na 1 2 3\nb 4 5 6\n", encoding="utf-8")
    with pytest.raises(ParseError, match="declares 3 entries"):
        load_word_vectors(path)


def test_load_word_vectors_empty_file(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyTableError):
        load_word_vectors(path)


def test_load_word_vectors_dimension_mismatch_reports_line(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("a 1 2 3\nb 4 5\n", encoding="utf-8")
    with pytest.raises(DimensionError, match=":2:"):
        load_word_vectors(path)
    path.write_text("a " + " ".join(["0.5"] * 299) + "\n", encoding="utf-8")
    with pytest.raises(DimensionError, match="299"):
        load_word_vectors(path, expected_dim=300)


def test_load_word_vectors_malformed_value_reports_line(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("a 1.0 2.0\nb 1.0 oops\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        load_word_vectors(path)


def test_load_word_vectors_duplicates_last_wins(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("a 1 2\na 3 4\n", encoding="utf-8")
    table = load_word_vectors(path)
    assert table.duplicates == 1
    assert np.array_equal(table.get("a"), [3.0, 4.0])


def test_word_vectors_text_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    table = WordVectorTable(
        dim=5, vectors={f"tok{i}": rng.standard_normal(5) for i in range(20)}
    )
    path = write_word_vectors(tmp_path / "vec.txt", table)
    loaded = load_word_vectors(path)
    assert loaded.dim == 5
    for token, vec in table.vectors.items():
        assert np.array_equal(loaded.get(token), vec)


# --- label composition ---------------------------------------------------------


def test_compose_single_word_label_returns_vector_exactly():
    table = small_table()
    assert np.array_equal(compose_label_embedding("dog", table), [1.0, 0.0])


def test_compose_multi_word_label_averages():
    table = small_table()
    assert np.array_equal(compose_label_embedding("sea waves", table), [0.5, 0.5])


def test_compose_lowercases_and_collapses_separators():
    table = small_table()
    expected = compose_label_embedding("sea waves", table)
    for variant in ("Sea  Waves", "SEA WAVES", "sea_waves", " sea\twaves "):
        assert np.array_equal(compose_label_embedding(variant, table), expected)


def test_tokenize_label_splits_whitespace_and_underscores_not_hyphens():
    assert tokenize_label("Door_Wood Knock") == ["door", "wood", "knock"]
    assert tokenize_label("t-rex") == ["t-rex"]


def test_compose_oov_policies():
    table = small_table()
    with pytest.raises(OovError, match="thunder"):
        compose_label_embedding("thunder dog", table, "error")
    skipped = compose_label_embedding("thunder dog", table, "skip")
    assert np.array_equal(skipped, [1.0, 0.0])
    with pytest.raises(EmptyCompositionError):
        compose_label_embedding("thunder storm", table, "skip")
    with pytest.raises(EmptyCompositionError):
        compose_label_embedding("   ", table, "skip")


def test_compose_mean_matches_bruteforce_oracle():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n_tokens = int(rng.integers(1, 6))
        dim = int(rng.integers(1, 8))
        vectors = {f"t{i}": rng.standard_normal(dim) for i in range(n_tokens)}
        table = WordVectorTable(dim=dim, vectors=vectors)
        label = " ".join(vectors)
        composed = compose_label_embedding(label, table)
        total = np.zeros(dim)
        for v in vectors.values():
            total = total + v
        assert np.allclose(composed, total / n_tokens, rtol=1e-12, atol=1e-12)


def test_compose_class_set_assigns_ids_in_order():
    rng = np.random.default_rng(1)
    table = WordVectorTable(
        dim=3, vectors={label: rng.standard_normal(3) for label in ANIMAL_LABELS}
    )
    classes = compose_class_set([(lb, "Animals") for lb in ANIMAL_LABELS], table)
    assert len(classes) == 10
    assert [c.class_id for c in classes] == list(range(10))
    assert classes.labels == ANIMAL_LABELS


def test_compose_class_set_single_label_is_valid():
    classes = compose_class_set([("dog", "Animals")], small_table())
    assert len(classes) == 1


def test_compose_full_esc50_label_set():
    rng = np.random.default_rng(4)
    tokens = {
        token
        for labels in ESC50_LABELS.values()
        for label in labels
        for token in label.split()
    }
    table = WordVectorTable(dim=6, vectors={t: rng.standard_normal(6) for t in tokens})
    pairs = [(label, cat) for cat, labels in ESC50_LABELS.items() for label in labels]
    classes = compose_class_set(pairs, table)
    assert len(classes) == 50
    assert [c.class_id for c in classes] == list(range(50))
    assert classes.label_dim == 6
    # a multi-word label is the mean of its token vectors
    expected = (table.get("sea") + table.get("waves")) / 2
    assert np.allclose(classes.phi_matrix[classes.id_of("sea waves")], expected)


def test_compose_class_set_rejects_duplicates_and_annotates_oov():
    table = small_table()
    with pytest.raises(DuplicateLabelError):
        compose_class_set([("dog", "a"), ("dog", "a")], table)
    with pytest.raises(OovError, match="label 'zebra'"):
        compose_class_set([("dog", "a"), ("zebra", "a")], table)


# --- frame aggregation ----------------------------------------------------------


def test_aggregate_frames_mean_and_identity():
    assert np.array_equal(aggregate_frames([[1.0, 2.0], [3.0, 4.0]]), [2.0, 3.0])
    assert np.array_equal(aggregate_frames([[5.0, 5.0]]), [5.0, 5.0])


def test_aggregate_five_frames_keeps_dimension():
    rng = np.random.default_rng(2)
    frames = rng.standard_normal((5, 128))
    assert aggregate_frames(frames).shape == (128,)


def test_aggregate_frames_errors():
    with pytest.raises(EmptyFramesError):
        aggregate_frames([])
    with pytest.raises(DimensionError):
        aggregate_frames([[1.0, 2.0], [1.0, 2.0, 3.0]])


@settings(max_examples=50)
@given(
    st.lists(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3),
        min_size=1,
        max_size=6,
    ),
    st.randoms(use_true_random=False),
)
def test_aggregate_frames_is_order_invariant(frames, rnd):
    shuffled = list(frames)
    rnd.shuffle(shuffled)
    assert np.allclose(
        aggregate_frames(frames), aggregate_frames(shuffled), rtol=1e-12, atol=1e-12
    )


# --- embeddings / manifest files -------------------------------------------------


def write_corpus(tmp_path, *, frames_for=None):
    frames_for = frames_for or set()
    rng = np.random.default_rng(7)
    records = []
    entries = {}
    lines = []
    import json

    for label in ("dog", "cat"):
        for s in range(3):
            sid = f"{label}-{s}"
            records.append(ManifestRecord(sid, label, "Animals", sid))
            vec = rng.standard_normal(4)
            entries[sid] = vec
            if sid in frames_for:
                frames = [list(vec + 0.0), list(vec - 0.0)]
                lines.append(json.dumps({"id": sid, "frames": frames}))
            else:
                lines.append(json.dumps({"id": sid, "embedding": list(vec)}))
    man_path = write_manifest(tmp_path / "manifest.csv", records)
    emb_path = tmp_path / "embeddings.jsonl"
    emb_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return man_path, emb_path, records, entries


def test_load_manifest_round_trip(tmp_path):
    man_path, emb_path, records, entries = write_corpus(tmp_path)
    manifest, embeddings = load_manifest(man_path, emb_path)
    assert list(manifest.records) == records
    assert manifest.audio_dim == 4
    for sid, vec in entries.items():
        assert np.array_equal(embeddings[sid], vec)
    # write -> load -> write again is byte identical
    second = write_manifest(tmp_path / "again.csv", manifest.records)
    assert second.read_bytes() == man_path.read_bytes()


def test_load_manifest_accepts_frame_entries(tmp_path):
    man_path, emb_path, _, entries = write_corpus(tmp_path, frames_for={"dog-0"})
    _, embeddings = load_manifest(man_path, emb_path)
    assert np.allclose(embeddings["dog-0"], entries["dog-0"])


def test_load_manifest_missing_embedding(tmp_path):
    man_path, emb_path, records, _ = write_corpus(tmp_path)
    write_manifest(man_path, records + [ManifestRecord("ghost", "dog", "Animals", "ghost")])
    with pytest.raises(MissingEmbeddingError, match="ghost"):
        load_manifest(man_path, emb_path)


def test_load_manifest_rejects_bad_header_and_rows(tmp_path):
    _, emb_path, _, _ = write_corpus(tmp_path)
    bad = tmp_path / "bad.csv"
    bad.write_text("id,lbl\n", encoding="utf-8")
    with pytest.raises(ParseError, match="header"):
        load_manifest(bad, emb_path)
    bad.write_text("sample_id,label,category,embedding_id\ndog-0,dog,Animals\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        load_manifest(bad, emb_path)


def test_manifest_rejects_duplicate_ids_and_label_category_conflicts():
    rec = ManifestRecord("s1", "dog", "Animals", "s1")
    with pytest.raises(ParseError, match="unique"):
        DatasetManifest([rec, rec], 4)
    with pytest.raises(ParseError, match="categories"):
        DatasetManifest(
            [rec, ManifestRecord("s2", "dog", "Natural", "s2")], 4
        )


def test_load_embeddings_mixed_frame_dims_rejected(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"id": "x", "frames": [[1.0, 2.0], [1.0]]}\n', encoding="utf-8")
    with pytest.raises(DimensionError, match=":1:"):
        load_embeddings(path)


def test_load_embeddings_rejects_duplicates_and_junk(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"id": "x", "embedding": [1.0]}\n{"id": "x", "embedding": [2.0]}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="duplicate"):
        load_embeddings(path)
    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":1:"):
        load_embeddings(path)


def test_embeddings_write_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    entries = {f"s{i}": rng.standard_normal(6) for i in range(5)}
    path = write_embeddings(tmp_path / "e.jsonl", entries)
    loaded = load_embeddings(path)
    assert list(loaded) == list(entries)
    for sid in entries:
        assert np.array_equal(loaded[sid], entries[sid])


def test_labels_csv_round_trip(tmp_path):
    labels = [("dog", "Animals"), ("sea waves", "Natural")]
    path = write_labels_csv(tmp_path / "labels.csv", labels)
    assert load_labels_csv(path) == labels


def test_composed_labels_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    table = WordVectorTable(dim=4, vectors={lb: rng.standard_normal(4) for lb in ANIMAL_LABELS})
    classes = compose_class_set([(lb, "Animals") for lb in ANIMAL_LABELS], table)
    path = write_composed_labels(tmp_path / "composed.jsonl", classes)
    loaded = load_composed_labels(path)
    assert loaded.labels == classes.labels
    assert np.array_equal(loaded.phi_matrix, classes.phi_matrix)
