"""Feature vector assembly: base query/doc/match features plus per-attribute
context-document scores, with normalization and ablation masks.

The vector layout is fixed: 8 base features followed by an interleaved
(lexical, semantic) score pair for each context attribute in schema order,
so a schema with K attributes yields 8 + 2K features. Absent context
contributes exact zeros, which makes a context-free query indistinguishable
from a masked one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import embedding as emb
from . import lexical
from .corpus import Dataset, Document, Query
from .errors import DataError

log = logging.getLogger(__name__)

BASE_FEATURES = (
    "query_len",
    "title_len",
    "body_len",
    "bm25_title",
    "bm25_body",
    "semantic_sim",
    "query_coverage",
    "all_terms_in_title",
)
SCHEMA_VERSION = "base-v1"


@dataclass(frozen=True)
class FeatureSchema:
    context_attrs: tuple[str, ...]
    base_features: tuple[str, ...] = BASE_FEATURES
    version: str = SCHEMA_VERSION

    @property
    def total_dim(self) -> int:
        return len(self.base_features) + 2 * len(self.context_attrs)

    def feature_names(self) -> list[str]:
        names = list(self.base_features)
        for attr in self.context_attrs:
            names.append(f"ctx_lex:{attr}")
            names.append(f"ctx_sem:{attr}")
        return names

    def context_slices(self) -> tuple[list[int], list[int]]:
        """Indices of the lexical and semantic context entries."""
        base = len(self.base_features)
        lex = [base + 2 * k for k in range(len(self.context_attrs))]
        sem = [base + 2 * k + 1 for k in range(len(self.context_attrs))]
        return lex, sem


@dataclass(frozen=True)
class AblationMask:
    use_context: bool = True
    use_lexical_context: bool = True
    use_semantic_context: bool = True

    def __post_init__(self):
        if not self.use_context:
            # master switch off forces both sub-flags off
            object.__setattr__(self, "use_lexical_context", False)
            object.__setattr__(self, "use_semantic_context", False)

    @classmethod
    def from_name(cls, name: str) -> "AblationMask":
        try:
            return MASKS[name]
        except KeyError:
            raise ValueError(f"unknown ablation {name!r}, expected one of {sorted(MASKS)}") from None


MASKS = {
    "full": AblationMask(),
    "no_context": AblationMask(use_context=False),
    "lexical_only": AblationMask(use_semantic_context=False),
    "semantic_only": AblationMask(use_lexical_context=False),
}


def mask_name(mask: AblationMask) -> str:
    for name, m in MASKS.items():
        if m == mask:
            return name
    return "custom"


class FeatureExtractor:
    """Prepared corpus statistics and embedding lookup for one dataset.

    Embeddings come from the store when the id is present; otherwise the
    deterministic hash fallback is used (and counted, so mixed provenance
    is visible). When a store is loaded its dim wins so both sides of any
    cosine agree.
    """

    def __init__(
        self,
        dataset: Dataset,
        store: emb.EmbeddingStore | None = None,
        params: lexical.Bm25Params = lexical.Bm25Params(),
        fallback_dim: int = emb.DEFAULT_DIM,
        fallback_seed: int = emb.DEFAULT_SEED,
    ):
        self.schema = FeatureSchema(context_attrs=tuple(dataset.context_attrs))
        self.params = params
        self.store = store if store is not None else emb.EmbeddingStore(dim=fallback_dim)
        self.dim = self.store.dim if self.store.entries else fallback_dim
        self.fallback_seed = fallback_seed
        self.fallback_count = 0
        self.title_stats = lexical.build_stats(dataset.documents, "title")
        self.body_stats = lexical.build_stats(dataset.documents, "body")
        self.tb_stats = lexical.build_stats(dataset.documents, "title_body")
        self._doc_emb_cache: dict[str, np.ndarray] = {}
        self._text_emb_cache: dict[str, np.ndarray] = {}

    def _embed_id(self, key: str, text: str) -> np.ndarray:
        vec = self.store.get(key)
        if vec is not None:
            return vec
        self.fallback_count += 1
        if self.fallback_count == 1 and self.store.entries:
            log.info("id %r missing from embedding store, using hash fallback", key)
        return self._embed_text(text)

    def _embed_text(self, text: str) -> np.ndarray:
        vec = self._text_emb_cache.get(text)
        if vec is None:
            vec = emb.hash_embed(text, self.dim, self.fallback_seed)
            self._text_emb_cache[text] = vec
        return vec

    def doc_embedding(self, doc: Document) -> np.ndarray:
        vec = self._doc_emb_cache.get(doc.id)
        if vec is None:
            vec = self._embed_id(doc.id, doc.title + " " + doc.body)
            self._doc_emb_cache[doc.id] = vec
        return vec

    def query_embedding(self, query: Query) -> np.ndarray:
        return self._embed_id(query.id, query.text)

    def context_value_embedding(self, attr: str, value: str) -> np.ndarray:
        return self._embed_id(f"ctx::{attr}::{value}", value)

    def context_scores(self, query: Query, doc: Document) -> np.ndarray:
        """Per-attribute (lexical, semantic) context-document scores, 2K values.

        Absent context or absent attribute emits zeros for that pair.
        """
        out = np.zeros(2 * len(self.schema.context_attrs))
        context = query.context
        if not context:
            return out
        unknown = set(context) - set(self.schema.context_attrs)
        if unknown:
            raise DataError(f"context attributes outside the schema: {sorted(unknown)}")
        doc_vec = self.doc_embedding(doc)
        for k, attr in enumerate(self.schema.context_attrs):
            value = context.get(attr)
            if value is None:
                continue
            terms = lexical.tokenize(value)
            out[2 * k] = lexical.bm25(terms, doc.id, "title_body", self.tb_stats, self.params)
            out[2 * k + 1] = emb.cosine(self.context_value_embedding(attr, value), doc_vec)
        return out

    def assemble(self, query: Query, doc: Document, mask: AblationMask = MASKS["full"]) -> np.ndarray:
        """Assemble the full feature vector for one (query, doc, context) triple."""
        if doc.id not in self.title_stats.doc_len:
            raise DataError(f"doc {doc.id!r} is not part of the corpus these stats were built on")
        q_tokens = lexical.tokenize(query.text)
        q_set = set(q_tokens)
        title_tokens = set(lexical.tokenize(doc.title))
        doc_tokens = title_tokens | set(lexical.tokenize(doc.body))
        if q_set:
            coverage = len(q_set & doc_tokens) / len(q_set)
            all_in_title = 1.0 if q_set <= title_tokens else 0.0
        else:
            coverage = 0.0
            all_in_title = 0.0
        base = np.array(
            [
                float(len(q_tokens)),
                float(self.title_stats.doc_len[doc.id]),
                float(self.body_stats.doc_len[doc.id]),
                lexical.bm25(q_tokens, doc.id, "title", self.title_stats, self.params),
                lexical.bm25(q_tokens, doc.id, "body", self.body_stats, self.params),
                emb.cosine(self.query_embedding(query), self.doc_embedding(doc)),
                coverage,
                all_in_title,
            ]
        )
        if mask.use_context:
            ctx = self.context_scores(query, doc)
            if not mask.use_lexical_context:
                ctx[0::2] = 0.0
            if not mask.use_semantic_context:
                ctx[1::2] = 0.0
        else:
            ctx = np.zeros(2 * len(self.schema.context_attrs))
        return np.concatenate([base, ctx])

    def feature_matrix(self, dataset: Dataset, mask: AblationMask) -> tuple[np.ndarray, list[tuple[str, str, int]]]:
        """Features for every judged (query, doc) pair, in group order.

        Returns the matrix and aligned (query_id, doc_id, label) rows.
        """
        rows: list[tuple[str, str, int]] = []
        feats: list[np.ndarray] = []
        groups = dataset.judgments_by_query()
        for query in dataset.queries:
            for j in groups[query.id]:
                feats.append(self.assemble(query, dataset.doc(j.doc_id), mask))
                rows.append((j.query_id, j.doc_id, j.label))
        matrix = np.vstack(feats) if feats else np.zeros((0, self.schema.total_dim))
        return matrix, rows


STD_FLOOR = 1e-6


@dataclass
class Normalizer:
    """Per-feature z-scoring statistics from the train split.

    Uses the population standard deviation, floored so constant features
    normalize to zero instead of dividing by zero.
    """

    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


def fit_normalizer(matrix: np.ndarray) -> Normalizer:
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError(f"need at least 2 rows to fit a normalizer, got shape {matrix.shape}")
    mean = matrix.mean(axis=0)
    std = np.maximum(matrix.std(axis=0), STD_FLOOR)
    return Normalizer(mean=mean, std=std)


def apply_normalizer(norm: Normalizer, x: np.ndarray) -> np.ndarray:
    return norm.apply(x)
