import json

import pytest

from ctxrank.corpus import (
    Dataset,
    Document,
    Judgment,
    Query,
    SynthSpec,
    gen_synthetic,
    load_dataset,
    planted_label,
    save_dataset,
    split_train_test,
    validate_dataset,
)
from ctxrank.errors import DataError


def tiny_dataset():
    docs = [
        Document("d1", "alpha title", "alpha body words"),
        Document("d2", "beta title", "beta body"),
        Document("d3", "gamma", ""),
    ]
    queries = [
        Query("q1", "alpha", {"geo": "seattle"}),
        Query("q2", "beta", None),
    ]
    judgments = [
        Judgment("q1", "d1", 3),
        Judgment("q1", "d2", 0),
        Judgment("q2", "d2", 2),
        Judgment("q2", "d3", 1),
    ]
    return Dataset(docs, queries, judgments, ["geo", "job_family"])


def test_round_trip(tmp_path):
    ds = tiny_dataset()
    save_dataset(ds, tmp_path)
    loaded = load_dataset(tmp_path)
    assert loaded.documents == ds.documents
    assert loaded.queries == ds.queries
    assert loaded.judgments == ds.judgments
    assert loaded.context_attrs == ds.context_attrs


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="missing file"):
        load_dataset(tmp_path)


def test_dangling_doc_reference(tmp_path):
    ds = tiny_dataset()
    save_dataset(ds, tmp_path)
    with open(tmp_path / "judgments.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps({"query_id": "q1", "doc_id": "ghost", "label": 1}) + "\n")
    with pytest.raises(DataError, match="ghost"):
        load_dataset(tmp_path)


def test_label_out_of_range_reports_line(tmp_path):
    ds = tiny_dataset()
    save_dataset(ds, tmp_path)
    with open(tmp_path / "judgments.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps({"query_id": "q2", "doc_id": "d1", "label": 5}) + "\n")
    with pytest.raises(DataError, match=r"judgments\.jsonl:5.*label out of range"):
        load_dataset(tmp_path)


def test_malformed_json_reports_line(tmp_path):
    ds = tiny_dataset()
    save_dataset(ds, tmp_path)
    with open(tmp_path / "documents.jsonl", "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(DataError, match=r"documents\.jsonl:4"):
        load_dataset(tmp_path)


def test_validate_rejects_bad_structures():
    ds = tiny_dataset()
    with pytest.raises(DataError, match="duplicate document id"):
        validate_dataset(Dataset(ds.documents + [Document("d1", "x", "y")], ds.queries, ds.judgments, ds.context_attrs))
    with pytest.raises(DataError, match="empty title and empty body"):
        validate_dataset(Dataset([Document("dx", "", "")], [], [], []))
    with pytest.raises(DataError, match="outside the schema"):
        validate_dataset(
            Dataset(ds.documents, [Query("q9", "x", {"nope": "v"})], [Judgment("q9", "d1", 1)], ds.context_attrs)
        )
    with pytest.raises(DataError, match="no judged documents"):
        validate_dataset(Dataset(ds.documents, ds.queries + [Query("q3", "x", None)], ds.judgments, ds.context_attrs))


def _many_queries(n):
    docs = [Document(f"d{i}", f"title {i}", "body") for i in range(n)]
    queries = [Query(f"q{i}", f"text {i}", None) for i in range(n)]
    judgments = [Judgment(f"q{i}", f"d{i}", 1) for i in range(n)]
    return Dataset(docs, queries, judgments, [])


@pytest.mark.parametrize("n,fraction,expected_train", [(10, 0.8, 8), (5, 0.8, 4), (10, 0.35, 3)])
def test_split_sizes(n, fraction, expected_train):
    tr, te = split_train_test(_many_queries(n), fraction, seed=42)
    assert len(tr.queries) == expected_train
    assert len(te.queries) == n - expected_train


def test_split_deterministic_and_partitions():
    ds = _many_queries(20)
    tr1, te1 = split_train_test(ds, 0.8, seed=7)
    tr2, te2 = split_train_test(ds, 0.8, seed=7)
    assert [q.id for q in tr1.queries] == [q.id for q in tr2.queries]
    ids_train = {q.id for q in tr1.queries}
    ids_test = {q.id for q in te1.queries}
    assert ids_train.isdisjoint(ids_test)
    assert ids_train | ids_test == {q.id for q in ds.queries}
    # judgments follow their query, documents are shared
    assert all(j.query_id in ids_train for j in tr1.judgments)
    assert tr1.documents is ds.documents


def test_split_partition_property_randomized():
    import numpy as np

    rng = np.random.default_rng(5)
    ds = _many_queries(13)
    for _ in range(25):
        fraction = float(rng.uniform(0.05, 0.95))
        seed = int(rng.integers(0, 1000))
        tr, te = split_train_test(ds, fraction, seed)
        ids_train = {q.id for q in tr.queries}
        ids_test = {q.id for q in te.queries}
        assert ids_train.isdisjoint(ids_test)
        assert ids_train | ids_test == {q.id for q in ds.queries}
        assert len(tr.queries) == int(np.floor(13 * fraction))


def test_split_too_few_queries():
    with pytest.raises(DataError):
        split_train_test(_many_queries(1), 0.8, 0)


def test_gen_synthetic_planted_rule_holds_everywhere():
    ds = gen_synthetic(SynthSpec(n_queries=50, docs_per_query=20, context_strength=1.0, seed=7))
    for j in ds.judgments:
        assert planted_label(ds.query(j.query_id), ds.doc(j.doc_id)) == j.label
    # every group separates grade 3 from grade 1 only through context tokens
    by_query = ds.judgments_by_query()
    for q in ds.queries:
        labels = {j.label for j in by_query[q.id]}
        assert 3 in labels and 1 in labels and 0 in labels


def test_gen_synthetic_alpha_zero_has_no_context():
    ds = gen_synthetic(SynthSpec(n_queries=20, docs_per_query=10, context_strength=0.0, seed=3))
    assert all(q.context is None for q in ds.queries)
    # schema still declares the attributes so mixed training can align
    assert ds.context_attrs == ["geo", "job_family"]
    for j in ds.judgments:
        assert planted_label(ds.query(j.query_id), ds.doc(j.doc_id)) == j.label


def test_gen_synthetic_byte_identical(tmp_path):
    spec = SynthSpec(n_queries=10, docs_per_query=8, seed=99)
    dir1 = tmp_path / "a"
    dir2 = tmp_path / "b"
    save_dataset(gen_synthetic(spec), dir1)
    save_dataset(gen_synthetic(spec), dir2)
    for name in ("documents.jsonl", "queries.jsonl", "judgments.jsonl", "schema.json"):
        assert (dir1 / name).read_bytes() == (dir2 / name).read_bytes()


def test_gen_synthetic_rejects_bad_specs():
    with pytest.raises(DataError, match="empty value pool"):
        gen_synthetic(SynthSpec(attr_pools={"geo": ()}))
    with pytest.raises(DataError, match="exceeds"):
        gen_synthetic(SynthSpec(docs_per_query=501))


def test_gen_synthetic_query_length_target():
    ds = gen_synthetic(SynthSpec(n_queries=100, seed=1))
    from ctxrank.lexical import tokenize

    mean_len = sum(len(tokenize(q.text)) for q in ds.queries) / len(ds.queries)
    assert 4.5 <= mean_len <= 6.5
