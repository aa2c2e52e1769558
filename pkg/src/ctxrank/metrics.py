"""Ranking metrics (NDCG@k, MAP, P@k, R@k) over model-scored query groups.

Conventions, fixed so numbers are reproducible:
    - NDCG gain is 2**label - 1, discount 1/log2(rank + 1), ranks from 1;
      0 when the ideal DCG is 0.
    - MAP / precision / recall binarize at label >= 2 (good or better).
    - P@k divides by k even when fewer documents exist.
    - Ties in score are broken by ascending doc id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset
from .errors import DataError
from .features import FeatureExtractor, AblationMask
from . import dcn
from .model_io import RankerModel

RELEVANT_THRESHOLD = 2


@dataclass
class RankedList:
    query_id: str
    doc_ids: list[str]  # descending score, ties by ascending doc id
    labels: list[int]  # aligned with doc_ids
    scores: list[float]


def rank_docs(query_id: str, doc_ids, scores, labels) -> RankedList:
    order = sorted(range(len(doc_ids)), key=lambda i: (-scores[i], doc_ids[i]))
    return RankedList(
        query_id=query_id,
        doc_ids=[doc_ids[i] for i in order],
        labels=[labels[i] for i in order],
        scores=[float(scores[i]) for i in order],
    )


def dcg_at_k(labels_in_rank_order, k: int) -> float:
    return sum(
        (2.0**label - 1.0) / math.log2(rank + 1)
        for rank, label in enumerate(labels_in_rank_order[:k], start=1)
    )


def ndcg_at_k(labels_in_rank_order, k: int) -> float:
    ideal = dcg_at_k(sorted(labels_in_rank_order, reverse=True), k)
    if ideal == 0.0:
        return 0.0
    return dcg_at_k(labels_in_rank_order, k) / ideal


def average_precision(labels_in_rank_order) -> float:
    relevant = [label >= RELEVANT_THRESHOLD for label in labels_in_rank_order]
    total = sum(relevant)
    if total == 0:
        return 0.0
    hits = 0
    acc = 0.0
    for rank, rel in enumerate(relevant, start=1):
        if rel:
            hits += 1
            acc += hits / rank
    return acc / total


def precision_at_k(labels_in_rank_order, k: int) -> float:
    hits = sum(1 for label in labels_in_rank_order[:k] if label >= RELEVANT_THRESHOLD)
    return hits / k


def recall_at_k(labels_in_rank_order, k: int) -> float:
    total = sum(1 for label in labels_in_rank_order if label >= RELEVANT_THRESHOLD)
    if total == 0:
        return 0.0
    hits = sum(1 for label in labels_in_rank_order[:k] if label >= RELEVANT_THRESHOLD)
    return hits / total


@dataclass
class QueryMetrics:
    query_id: str
    ndcg: float
    ap: float
    precision: float
    recall: float


@dataclass
class MetricsReport:
    k: int
    per_query: list[QueryMetrics]

    @property
    def mean_ndcg(self) -> float:
        return float(np.mean([m.ndcg for m in self.per_query])) if self.per_query else 0.0

    @property
    def mean_ap(self) -> float:
        return float(np.mean([m.ap for m in self.per_query])) if self.per_query else 0.0

    @property
    def mean_precision(self) -> float:
        return float(np.mean([m.precision for m in self.per_query])) if self.per_query else 0.0

    @property
    def mean_recall(self) -> float:
        return float(np.mean([m.recall for m in self.per_query])) if self.per_query else 0.0

    def to_tsv(self) -> str:
        lines = [f"query_id\tndcg@{self.k}\tmap\tp@{self.k}\trecall@{self.k}"]
        for m in self.per_query:
            lines.append(
                f"{m.query_id}\t{m.ndcg:.6f}\t{m.ap:.6f}\t{m.precision:.6f}\t{m.recall:.6f}"
            )
        lines.append(
            f"MEAN\t{self.mean_ndcg:.6f}\t{self.mean_ap:.6f}\t{self.mean_precision:.6f}\t{self.mean_recall:.6f}"
        )
        return "\n".join(lines) + "\n"


def score_group(model: RankerModel, extractor: FeatureExtractor, query, docs, mask=None) -> np.ndarray:
    """Scores for a list of docs under one query via the full pipeline."""
    mask = mask if mask is not None else model.mask
    feats = np.vstack([extractor.assemble(query, d, mask) for d in docs])
    scores, _ = dcn.forward_batch(model.params, model.normalizer.apply(feats))
    return scores


def evaluate(
    model: RankerModel,
    dataset: Dataset,
    extractor: FeatureExtractor,
    k: int = 10,
    mask: AblationMask | None = None,
) -> MetricsReport:
    """Score every judged doc per query, rank with the tie-break rule and
    compute all four metrics. ``mask`` overrides the model's stored mask
    (used by the context on/off evaluation experiments)."""
    if extractor.schema.context_attrs != model.schema.context_attrs:
        raise DataError(
            f"model schema {model.schema.context_attrs} does not match dataset schema "
            f"{extractor.schema.context_attrs}"
        )
    groups = dataset.judgments_by_query()
    per_query: list[QueryMetrics] = []
    for query in dataset.queries:
        judgments = groups[query.id]
        docs = [dataset.doc(j.doc_id) for j in judgments]
        scores = score_group(model, extractor, query, docs, mask)
        ranked = rank_docs(query.id, [d.id for d in docs], scores.tolist(), [j.label for j in judgments])
        per_query.append(
            QueryMetrics(
                query_id=query.id,
                ndcg=ndcg_at_k(ranked.labels, k),
                ap=average_precision(ranked.labels),
                precision=precision_at_k(ranked.labels, k),
                recall=recall_at_k(ranked.labels, k),
            )
        )
    return MetricsReport(k=k, per_query=per_query)
