import itertools
import math

import pytest

from ctxrank.corpus import Document
from ctxrank.errors import DataError
from ctxrank.lexical import Bm25Params, bm25, build_stats, rsj_weight, tokenize


# Independent from-definition evaluation of the score, used as the oracle.
# Works directly on token lists, no shared code with the implementation.
def oracle_bm25(query_terms, doc_tokens, all_doc_tokens, k1, b):
    n = len(all_doc_tokens)
    avg_len = sum(len(toks) for toks in all_doc_tokens) / n
    score = 0.0
    for t in set(query_terms):
        tf = sum(1 for tok in doc_tokens if tok == t)
        if tf == 0:
            continue
        df = sum(1 for toks in all_doc_tokens if t in toks)
        r_t = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        score += r_t * tf / (tf + k1 * ((1.0 - b) + b * len(doc_tokens) / avg_len))
    return score


@pytest.mark.parametrize(
    "text,expected",
    [
        ("Benefits, USA!", ["benefits", "usa"]),
        ("", []),
        ("C++ engineer", ["c", "engineer"]),
        ("foo_bar", ["foo", "bar"]),
        ("  a\t\nb  ", ["a", "b"]),
    ],
)
def test_tokenize(text, expected):
    assert tokenize(text) == expected


def test_tokenize_idempotent():
    for text in ["Benefits, USA!", "C++ engineer", "a-b_c.d", "123 abc!@# x9"]:
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once


def _docs(bodies):
    return [Document(id=f"d{i}", title="", body=b) for i, b in enumerate(bodies, start=1)]


def test_build_stats_hand_counts():
    stats = build_stats(_docs(["a b", "a c", "b c"]), "body")
    assert stats.n_docs == 3
    assert stats.df("a") == 2 and stats.df("b") == 2 and stats.df("c") == 2
    assert stats.avg_len == 2.0
    assert stats.df("zzz") == 0
    assert "zzz" not in stats.doc_freq


def test_build_stats_single_doc():
    stats = build_stats(_docs(["a a a"]), "body")
    assert stats.df("a") == 1
    assert stats.doc_len["d1"] == 3
    assert stats.avg_len == 3.0


def test_build_stats_empty_collection():
    with pytest.raises(DataError):
        build_stats([], "body")


def test_bm25_worked_example():
    # r_a = ln(1 + 1.5/2.5), tf=1, |d|=avg=2, denom = 1 + 1.2 = 2.2
    stats = build_stats(_docs(["a b", "a c", "b c"]), "body")
    score = bm25(["a"], "d1", "body", stats, Bm25Params(k1=1.2, b=0.75))
    assert score == pytest.approx(0.2136380132935162, abs=1e-9)
    assert score == pytest.approx(math.log(1.6) / 2.2, abs=1e-12)


def test_bm25_no_overlap_and_empty_terms():
    stats = build_stats(_docs(["a b", "a c", "b c"]), "body")
    assert bm25(["z"], "d1", "body", stats) == 0.0
    assert bm25([], "d2", "body", stats) == 0.0


def test_bm25_unknown_doc_and_wrong_field():
    stats = build_stats(_docs(["a b"]), "body")
    with pytest.raises(DataError):
        bm25(["a"], "nope", "body", stats)
    with pytest.raises(DataError):
        bm25(["a"], "d1", "title", stats)


def test_bm25_matches_oracle_exhaustively():
    bodies = ["a b c", "a a d", "b d e", "c c c e", "a e"]
    docs = _docs(bodies)
    token_lists = [b.split() for b in bodies]
    stats = build_stats(docs, "body")
    params = Bm25Params(k1=1.2, b=0.75)
    vocab = ["a", "b", "c", "d", "e"]
    queries = [[]]
    for size in (1, 2, 3):
        queries.extend(list(q) for q in itertools.product(vocab, repeat=size))
    for terms in queries:
        for i, doc in enumerate(docs):
            got = bm25(terms, doc.id, "body", stats, params)
            want = oracle_bm25(terms, token_lists[i], token_lists, params.k1, params.b)
            assert got == pytest.approx(want, abs=1e-9)


def test_bm25_monotone_in_tf():
    # same doc length, increasing tf of the matched term
    docs = _docs(["a x y z", "a a y z", "a a a z", "q r s t"])
    stats = build_stats(docs, "body")
    scores = [bm25(["a"], f"d{i}", "body", stats) for i in (1, 2, 3)]
    assert scores[0] < scores[1] < scores[2]


def test_bm25_non_negative_randomized():
    import numpy as np

    rng = np.random.default_rng(3)
    vocab = list("abcdefgh")
    for _ in range(50):
        bodies = [
            " ".join(rng.choice(vocab, size=rng.integers(1, 8)))
            for _ in range(int(rng.integers(1, 6)))
        ]
        stats = build_stats(_docs(bodies), "body")
        terms = list(rng.choice(vocab, size=rng.integers(0, 4)))
        for i in range(len(bodies)):
            assert bm25(terms, f"d{i+1}", "body", stats) >= 0.0


def test_rsj_weight_positive():
    for n in (1, 2, 10, 1000):
        for df in range(1, n + 1):
            assert rsj_weight(n, df) > 0.0
