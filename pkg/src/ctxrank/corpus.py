"""Dataset model, on-disk JSONL schema, query-group splitting and the
synthetic benchmark generator.

A dataset directory holds four UTF-8 newline-delimited files:

    documents.jsonl   {"id", "title", "body"}
    queries.jsonl     {"id", "text", "context": {attr: value, ...}}  (context optional)
    judgments.jsonl   {"query_id", "doc_id", "label"}
    schema.json       {"context_attrs": ["geo", "job_family", ...]}  (ordered)

Labels are integer grades 0..3 (bad, fair, good, perfect).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .lexical import tokenize

MAX_JUDGED_PER_QUERY = 500
LABELS = (0, 1, 2, 3)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    body: str


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    context: dict[str, str] | None = None


@dataclass(frozen=True)
class Judgment:
    query_id: str
    doc_id: str
    label: int


@dataclass
class Dataset:
    documents: list[Document]
    queries: list[Query]
    judgments: list[Judgment]
    context_attrs: list[str]
    _doc_index: dict[str, Document] = field(default_factory=dict, repr=False)
    _query_index: dict[str, Query] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._doc_index:
            self._doc_index = {d.id: d for d in self.documents}
        if not self._query_index:
            self._query_index = {q.id: q for q in self.queries}

    def doc(self, doc_id: str) -> Document:
        return self._doc_index[doc_id]

    def query(self, query_id: str) -> Query:
        return self._query_index[query_id]

    def judgments_by_query(self) -> dict[str, list[Judgment]]:
        """Judgments grouped per query, preserving file order within groups."""
        groups: dict[str, list[Judgment]] = {q.id: [] for q in self.queries}
        for j in self.judgments:
            groups[j.query_id].append(j)
        return groups


def validate_dataset(ds: Dataset) -> None:
    """Enforce every structural invariant; raises DataError on the first failure."""
    seen_docs: set[str] = set()
    for d in ds.documents:
        if not d.id:
            raise DataError("document with empty id")
        if d.id in seen_docs:
            raise DataError(f"duplicate document id {d.id!r}")
        seen_docs.add(d.id)
        if d.title == "" and d.body == "":
            raise DataError(f"document {d.id!r} has empty title and empty body")
    attrs = set(ds.context_attrs)
    if len(attrs) != len(ds.context_attrs):
        raise DataError("duplicate attribute names in context schema")
    seen_queries: set[str] = set()
    for q in ds.queries:
        if not q.id:
            raise DataError("query with empty id")
        if q.id in seen_queries:
            raise DataError(f"duplicate query id {q.id!r}")
        seen_queries.add(q.id)
        if q.context is not None:
            unknown = set(q.context) - attrs
            if unknown:
                raise DataError(
                    f"query {q.id!r} uses context attributes outside the schema: {sorted(unknown)}"
                )
    seen_pairs: set[tuple[str, str]] = set()
    per_query: dict[str, int] = {}
    for j in ds.judgments:
        if j.label not in LABELS:
            raise DataError(f"label out of range for ({j.query_id!r}, {j.doc_id!r}): {j.label}")
        if j.query_id not in seen_queries:
            raise DataError(f"judgment references unknown query id {j.query_id!r}")
        if j.doc_id not in seen_docs:
            raise DataError(f"judgment references unknown doc id {j.doc_id!r}")
        pair = (j.query_id, j.doc_id)
        if pair in seen_pairs:
            raise DataError(f"duplicate judgment for {pair}")
        seen_pairs.add(pair)
        per_query[j.query_id] = per_query.get(j.query_id, 0) + 1
    for q in ds.queries:
        count = per_query.get(q.id, 0)
        if count == 0:
            raise DataError(f"query {q.id!r} has no judged documents")
        if count > MAX_JUDGED_PER_QUERY:
            raise DataError(
                f"query {q.id!r} has {count} judged documents, limit is {MAX_JUDGED_PER_QUERY}"
            )


def _read_jsonl(path: Path, required: tuple[str, ...]):
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path.name}:{lineno}: expected an object")
            for key in required:
                if key not in obj:
                    raise DataError(f"{path.name}:{lineno}: missing field {key!r}")
            records.append((lineno, obj))
    return records


def load_dataset(dir_path) -> Dataset:
    root = Path(dir_path)
    schema_path = root / "schema.json"
    if not schema_path.is_file():
        raise DataError(f"missing file: {schema_path}")
    with open(schema_path, encoding="utf-8") as fh:
        try:
            schema = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"schema.json: malformed JSON ({exc.msg})") from exc
    attrs = schema.get("context_attrs")
    if not isinstance(attrs, list) or not all(isinstance(a, str) for a in attrs):
        raise DataError('schema.json: "context_attrs" must be a list of strings')

    documents = []
    for lineno, obj in _read_jsonl(root / "documents.jsonl", ("id", "title", "body")):
        documents.append(Document(id=str(obj["id"]), title=str(obj["title"]), body=str(obj["body"])))
    queries = []
    for lineno, obj in _read_jsonl(root / "queries.jsonl", ("id", "text")):
        context = obj.get("context")
        if context is not None:
            if not isinstance(context, dict):
                raise DataError(f'queries.jsonl:{lineno}: "context" must be an object')
            context = {str(k): str(v) for k, v in context.items()}
        queries.append(Query(id=str(obj["id"]), text=str(obj["text"]), context=context))
    judgments = []
    for lineno, obj in _read_jsonl(root / "judgments.jsonl", ("query_id", "doc_id", "label")):
        label = obj["label"]
        if not isinstance(label, int) or isinstance(label, bool) or label not in LABELS:
            raise DataError(f"judgments.jsonl:{lineno}: label out of range: {label!r}")
        judgments.append(Judgment(query_id=str(obj["query_id"]), doc_id=str(obj["doc_id"]), label=label))

    ds = Dataset(documents=documents, queries=queries, judgments=judgments, context_attrs=list(attrs))
    validate_dataset(ds)
    return ds


def save_dataset(ds: Dataset, dir_path) -> None:
    """Write the four dataset files; byte-deterministic for equal inputs."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "schema.json", "w", encoding="utf-8") as fh:
        json.dump({"context_attrs": ds.context_attrs}, fh, separators=(",", ":"))
        fh.write("\n")
    with open(root / "documents.jsonl", "w", encoding="utf-8") as fh:
        for d in ds.documents:
            fh.write(json.dumps({"id": d.id, "title": d.title, "body": d.body}, separators=(",", ":")))
            fh.write("\n")
    with open(root / "queries.jsonl", "w", encoding="utf-8") as fh:
        for q in ds.queries:
            obj: dict = {"id": q.id, "text": q.text}
            if q.context is not None:
                obj["context"] = q.context
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")
    with open(root / "judgments.jsonl", "w", encoding="utf-8") as fh:
        for j in ds.judgments:
            fh.write(
                json.dumps(
                    {"query_id": j.query_id, "doc_id": j.doc_id, "label": j.label},
                    separators=(",", ":"),
                )
            )
            fh.write("\n")


def split_train_test(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split by whole query groups: floor(n * fraction) groups to train,
    the remainder to test. Documents are shared by both splits."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(ds.queries) < 2:
        raise DataError(f"cannot split a dataset with {len(ds.queries)} queries")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ds.queries))
    n_train = math.floor(len(ds.queries) * train_fraction)
    train_ids = {ds.queries[i].id for i in order[:n_train]}

    def subset(selected: set[str]) -> Dataset:
        return Dataset(
            documents=ds.documents,
            queries=[q for q in ds.queries if q.id in selected],
            judgments=[j for j in ds.judgments if j.query_id in selected],
            context_attrs=ds.context_attrs,
        )

    test_ids = {q.id for q in ds.queries} - train_ids
    return subset(train_ids), subset(test_ids)


# ---------------------------------------------------------------------------
# Synthetic benchmark generation
# ---------------------------------------------------------------------------

# Three pairwise-disjoint vocabularies keep the planted relevance rule exactly
# recoverable from text: query filler never occurs in documents, document
# filler never occurs in queries, and topics are the only shared tokens.
TOPICS = (
    "benefits", "payroll", "onboarding", "insurance", "vacation", "expenses",
    "travel", "training", "parking", "relocation", "wellness", "retirement",
    "bonus", "promotion", "transfer", "badge", "laptop", "software",
    "mentoring", "healthcare", "visa", "timesheet", "compliance", "stipend",
)
QUERY_FILLER = (
    "how", "do", "i", "find", "about", "info", "need", "help", "where",
    "get", "policy", "process", "request", "details", "guide",
)
DOC_FILLER = (
    "overview", "summary", "document", "page", "section", "team", "company",
    "internal", "portal", "resource", "update", "annual", "general",
    "handbook", "notice", "guidelines", "reference", "archive", "report",
)

DEFAULT_ATTR_POOLS: dict[str, tuple[str, ...]] = {
    "geo": ("seattle", "boston", "austin", "london", "berlin", "tokyo", "sydney", "toronto"),
    "job_family": ("engineer", "manager", "designer", "scientist", "analyst", "recruiter"),
}


@dataclass
class SynthSpec:
    n_queries: int = 50
    docs_per_query: int = 20
    attr_pools: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: {k: tuple(v) for k, v in DEFAULT_ATTR_POOLS.items()}
    )
    context_strength: float = 1.0  # probability a query carries context
    seed: int = 0
    perfect_fraction: float = 0.25
    good_fraction: float = 0.15
    fair_fraction: float = 0.30
    title_len: int = 3
    body_len: int = 12


def planted_label(query: Query, doc: Document) -> int:
    """Re-derive the planted grade of a generated (query, doc) pair from text.

    3: topic match and every context token present; 2: topic match and a
    nonempty proper subset of context tokens; 1: topic match only;
    0: no topic match. A query without context vacuously satisfies the
    context requirement, so topic match alone gives 3.
    """
    q_tokens = set(tokenize(query.text))
    d_tokens = set(tokenize(doc.title + " " + doc.body))
    if not q_tokens & d_tokens:
        return 0
    ctx_tokens: set[str] = set()
    for value in (query.context or {}).values():
        ctx_tokens.update(tokenize(value))
    if not ctx_tokens:
        return 3
    present = ctx_tokens & d_tokens
    if present == ctx_tokens:
        return 3
    if present:
        return 2
    return 1


def gen_synthetic(spec: SynthSpec) -> Dataset:
    """Generate a dataset whose grades follow the planted rule exactly.

    Within a group, on-topic documents are textually identical in length
    and topic frequency and differ only in which context tokens they carry,
    so grades 3 vs 1 are separable only through the context signal.
    """
    if spec.docs_per_query > MAX_JUDGED_PER_QUERY:
        raise DataError(f"docs_per_query {spec.docs_per_query} exceeds {MAX_JUDGED_PER_QUERY}")
    if spec.docs_per_query < 2:
        raise DataError("docs_per_query must be >= 2")
    if spec.n_queries < 1:
        raise DataError("n_queries must be >= 1")
    for name, pool in spec.attr_pools.items():
        if not pool:
            raise DataError(f"empty value pool for attribute {name!r}")
    rng = np.random.default_rng(spec.seed)

    documents: list[Document] = []
    queries: list[Query] = []
    judgments: list[Judgment] = []

    def fillers(n: int) -> list[str]:
        return [DOC_FILLER[i] for i in rng.integers(0, len(DOC_FILLER), size=n)]

    for qi in range(spec.n_queries):
        qid = f"q{qi:04d}"
        topic = TOPICS[rng.integers(0, len(TOPICS))]
        n_filler = int(rng.integers(4, 6))  # query length ~5..6 tokens
        q_words = [QUERY_FILLER[i] for i in rng.integers(0, len(QUERY_FILLER), size=n_filler)]
        q_words.insert(int(rng.integers(0, n_filler + 1)), topic)
        has_context = bool(spec.attr_pools) and rng.random() < spec.context_strength
        context = None
        ctx_tokens: list[str] = []
        if has_context:
            context = {}
            for name, pool in spec.attr_pools.items():
                value = pool[rng.integers(0, len(pool))]
                context[name] = value
                for tok in tokenize(value):
                    if tok not in ctx_tokens:
                        ctx_tokens.append(tok)
        queries.append(Query(id=qid, text=" ".join(q_words), context=context))

        m = spec.docs_per_query
        if ctx_tokens:
            n_perfect = max(1, round(spec.perfect_fraction * m))
            n_good = round(spec.good_fraction * m) if len(ctx_tokens) >= 2 else 0
            n_fair = max(1, round(spec.fair_fraction * m))
        else:
            # without context the rule collapses grades 1..3 into 3
            n_perfect = max(
                1, round((spec.perfect_fraction + spec.good_fraction + spec.fair_fraction) * m)
            )
            n_good = 0
            n_fair = 0
        if n_perfect + n_good > m - 1:
            n_good = max(0, m - 1 - n_perfect)
        if n_perfect + n_good + n_fair > m - 1:
            n_fair = max(0, m - 1 - n_perfect - n_good)
        n_bad = m - n_perfect - n_good - n_fair

        plan = [3] * n_perfect + [2] * n_good + [1] * n_fair + [0] * n_bad
        for di, grade in enumerate(plan):
            doc_id = f"{qid}-d{di:03d}"
            if grade == 0:
                other = TOPICS[rng.integers(0, len(TOPICS))]
                while other == topic:
                    other = TOPICS[rng.integers(0, len(TOPICS))]
                title_words = [other] + fillers(spec.title_len - 1)
                body_words = [other] + fillers(spec.body_len - 1)
            else:
                carried = []
                if grade == 3:
                    carried = list(ctx_tokens)
                elif grade == 2:
                    keep = int(rng.integers(1, len(ctx_tokens)))
                    carried = list(ctx_tokens[:keep])
                pad = spec.body_len - 1 - len(carried)
                if pad < 0:
                    raise DataError(
                        f"body_len {spec.body_len} too small for {len(carried)} context tokens"
                    )
                title_words = [topic] + fillers(spec.title_len - 1)
                body_words = [topic] + carried + fillers(pad)
            documents.append(Document(id=doc_id, title=" ".join(title_words), body=" ".join(body_words)))
            judgments.append(Judgment(query_id=qid, doc_id=doc_id, label=grade))

    ds = Dataset(
        documents=documents,
        queries=queries,
        judgments=judgments,
        context_attrs=list(spec.attr_pools),
    )
    validate_dataset(ds)
    return ds
