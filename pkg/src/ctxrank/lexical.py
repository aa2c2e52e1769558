"""Tokenization, corpus statistics and BM25 scoring.

The BM25 variant used here is

    score(terms, d) = sum over t in terms-intersect-d of
        r_t * tf / (tf + k1 * ((1 - b) + b * |d| / avg_len))

with the feedback-free Robertson-Sparck Jones weight

    r_t = ln(1 + (N - df_t + 0.5) / (df_t + 0.5))

which is non-negative for every df_t in (0, N]. Terms are matched as a
set: repeating a term in the input does not change the score.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import DataError

# Runs of unicode alphanumerics; underscore is split like punctuation.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Field selectors understood by build_stats / bm25.
FIELDS = ("title", "body", "title_body")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on every non-alphanumeric character, drop empties."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class CorpusStats:
    """Document frequencies, lengths and per-document term counts for one field."""

    field: str
    n_docs: int
    doc_freq: dict[str, int]
    doc_len: dict[str, int]
    avg_len: float
    # tf lookup needed to evaluate the score for a doc id
    term_freq: dict[str, Counter] = field(default_factory=dict)

    def df(self, term: str) -> int:
        return self.doc_freq.get(term, 0)


def field_text(doc, selector: str) -> str:
    if selector == "title":
        return doc.title
    if selector == "body":
        return doc.body
    if selector == "title_body":
        return doc.title + " " + doc.body
    raise ValueError(f"unknown field selector {selector!r}, expected one of {FIELDS}")


def build_stats(documents, selector: str) -> CorpusStats:
    """Build corpus statistics over one field of a document collection.

    df counts documents containing a term at least once; avg_len is the
    mean token count of the selected field.
    """
    docs = list(documents)
    if not docs:
        raise DataError("cannot build corpus statistics over an empty collection")
    doc_freq: dict[str, int] = {}
    doc_len: dict[str, int] = {}
    term_freq: dict[str, Counter] = {}
    for doc in docs:
        tokens = tokenize(field_text(doc, selector))
        counts = Counter(tokens)
        doc_len[doc.id] = len(tokens)
        term_freq[doc.id] = counts
        for term in counts:
            doc_freq[term] = doc_freq.get(term, 0) + 1
    avg_len = sum(doc_len.values()) / len(docs)
    return CorpusStats(
        field=selector,
        n_docs=len(docs),
        doc_freq=doc_freq,
        doc_len=doc_len,
        avg_len=avg_len,
        term_freq=term_freq,
    )


def rsj_weight(n_docs: int, df: int) -> float:
    """Feedback-free RSJ term weight, ln(1 + (N - df + 0.5) / (df + 0.5))."""
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25(terms, doc_id: str, selector: str, stats: CorpusStats, params: Bm25Params = Bm25Params()) -> float:
    """Score a token list against one document under the given stats.

    Returns 0.0 when no term overlaps the document. Raises ``DataError``
    for an unknown doc id or stats built over a different field.
    """
    if stats.field != selector:
        raise DataError(
            f"stats were built over field {stats.field!r} but {selector!r} was requested"
        )
    if doc_id not in stats.doc_len:
        raise DataError(f"unknown doc id {doc_id!r}")
    if stats.avg_len == 0.0:
        # every document is empty in this field, nothing can match
        return 0.0
    counts = stats.term_freq[doc_id]
    length = stats.doc_len[doc_id]
    norm = params.k1 * ((1.0 - params.b) + params.b * length / stats.avg_len)
    score = 0.0
    for term in set(terms):
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        score += rsj_weight(stats.n_docs, stats.doc_freq[term]) * tf / (tf + norm)
    return score
