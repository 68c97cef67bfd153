"""TF-IDF and BM25 query-review scoring over an in-memory inverted index.

Tokenization is pinned: lowercase, split on non-word characters, drop a fixed
English stopword list, then apply the in-repo suffix stemmer. Reported
baseline numbers therefore track, but need not bit-match, runs that used a
different tokenizer stack.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Query
from .porter import stem

# Fixed English stopword list. The tokenizer splits on apostrophes, so
# contraction fragments (s, t, ve, ...) are listed as standalone tokens.
STOPWORDS = frozenset("""
a about above after again against ain all am an and any are aren as at be
because been before being below between both but by can could couldn d did
didn do does doesn doing don down during each few for from further had hadn
has hasn have haven having he her here hers herself him himself his how i if
in into is isn it its itself just ll m ma me mightn more most mustn my myself
needn no nor not now o of off on once only or other our ours ourselves out
over own re s same shan she should shouldn so some such t than that the their
theirs them themselves then there these they this those through to too under
until up ve very was wasn we were weren what when where which while who whom
why will with won wouldn y you your yours yourself yourselves
""".split())

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased, stopword-filtered, stemmed terms; may be empty."""
    terms = []
    for raw in _TOKEN_RE.findall(text.lower()):
        if raw in STOPWORDS:
            continue
        terms.append(stem(raw))
    return terms


@dataclass
class SparseIndex:
    """Term statistics for one corpus snapshot.

    postings[t] lists (review position, term frequency) for every review
    containing term id t; review positions follow corpus order.
    """

    vocab: dict[str, int]
    df: np.ndarray
    postings: list[list[tuple[int, int]]]
    review_tf: list[dict[int, int]]
    review_ids: tuple[str, ...]
    review_pos: dict[str, int]
    review_items: tuple[str, ...]
    lengths: np.ndarray
    avg_len: float
    n_reviews: int
    tfidf_norms: np.ndarray

    def idf_bm25(self, term_id: int) -> float:
        df = float(self.df[term_id])
        return math.log(1.0 + (self.n_reviews - df + 0.5) / (df + 0.5))

    def idf_tfidf(self, term_id: int) -> float:
        return math.log(self.n_reviews / float(self.df[term_id]))


def build_index(corpus: Corpus) -> SparseIndex:
    """Tokenize every review and build vocabulary, postings, and norms."""
    if corpus.n_reviews == 0:
        raise ValueError("cannot index a corpus with zero reviews")
    vocab: dict[str, int] = {}
    review_tf: list[dict[int, int]] = []
    review_ids: list[str] = []
    review_items: list[str] = []
    lengths: list[int] = []
    for review in corpus.reviews():
        counts: dict[int, int] = {}
        terms = tokenize(review.text)
        for term in terms:
            term_id = vocab.setdefault(term, len(vocab))
            counts[term_id] = counts.get(term_id, 0) + 1
        review_tf.append(counts)
        review_ids.append(review.review_id)
        review_items.append(review.item_id)
        lengths.append(len(terms))

    n_reviews = len(review_ids)
    df = np.zeros(len(vocab), dtype=np.int64)
    postings: list[list[tuple[int, int]]] = [[] for _ in vocab]
    for pos, counts in enumerate(review_tf):
        for term_id, tf in counts.items():
            df[term_id] += 1
            postings[term_id].append((pos, tf))

    index = SparseIndex(
        vocab=vocab,
        df=df,
        postings=postings,
        review_tf=review_tf,
        review_ids=tuple(review_ids),
        review_pos={rid: pos for pos, rid in enumerate(review_ids)},
        review_items=tuple(review_items),
        lengths=np.asarray(lengths, dtype=np.int64),
        avg_len=float(np.mean(lengths)),
        n_reviews=n_reviews,
        tfidf_norms=np.zeros(n_reviews),
    )
    norms = np.zeros(n_reviews)
    for pos, counts in enumerate(review_tf):
        norms[pos] = math.sqrt(
            sum(
                ((1.0 + math.log(tf)) * index.idf_tfidf(term_id)) ** 2
                for term_id, tf in counts.items()
            )
        )
    index.tfidf_norms = norms
    return index


def _query_term_ids(index: SparseIndex, query: Query) -> list[int]:
    # terms absent from the vocabulary contribute nothing
    return [index.vocab[t] for t in tokenize(query.text) if t in index.vocab]


def _bm25_term(index: SparseIndex, term_id: int, tf: int, length: int,
               k1: float, b: float) -> float:
    norm = 1.0 - b + b * length / index.avg_len
    return index.idf_bm25(term_id) * tf * (k1 + 1.0) / (tf + k1 * norm)


def bm25_score(index: SparseIndex, query: Query, review_id: str,
               k1: float = 1.6, b: float = 0.75) -> float:
    """Okapi BM25 over unique query terms, with ln(1 + .) document idf."""
    if review_id not in index.review_pos:
        raise KeyError(f"unknown review_id {review_id!r}")
    pos = index.review_pos[review_id]
    counts = index.review_tf[pos]
    length = int(index.lengths[pos])
    score = 0.0
    for term_id in set(_query_term_ids(index, query)):
        tf = counts.get(term_id, 0)
        if tf:
            score += _bm25_term(index, term_id, tf, length, k1, b)
    return score


def _tfidf_query_vector(index: SparseIndex, query: Query) -> dict[int, float]:
    counts: dict[int, int] = {}
    for term_id in _query_term_ids(index, query):
        counts[term_id] = counts.get(term_id, 0) + 1
    return {
        term_id: (1.0 + math.log(tf)) * index.idf_tfidf(term_id)
        for term_id, tf in counts.items()
    }


def tfidf_score(index: SparseIndex, query: Query, review_id: str) -> float:
    """Cosine similarity of log-weighted tf-idf vectors; in [0, 1]."""
    if review_id not in index.review_pos:
        raise KeyError(f"unknown review_id {review_id!r}")
    pos = index.review_pos[review_id]
    q_vec = _tfidf_query_vector(index, query)
    q_norm = math.sqrt(sum(w * w for w in q_vec.values()))
    d_norm = float(index.tfidf_norms[pos])
    if q_norm == 0.0 or d_norm == 0.0:
        return 0.0
    counts = index.review_tf[pos]
    dot = sum(
        w * (1.0 + math.log(counts[term_id])) * index.idf_tfidf(term_id)
        for term_id, w in q_vec.items()
        if term_id in counts
    )
    return dot / (q_norm * d_norm)


def score_all(index: SparseIndex, query: Query, scorer: str = "bm25",
              k1: float = 1.6, b: float = 0.75) -> dict[str, list[tuple[str, float]]]:
    """Score every review against the query, grouped per item.

    Reviews sharing no term with the query score 0 and are still listed, so
    downstream fusion sees each item's full review set. Lists are sorted by
    descending score, then review_id.
    """
    if scorer not in ("bm25", "tfidf"):
        raise ValueError(f"unknown scorer {scorer!r}")
    scores = np.zeros(index.n_reviews)
    if scorer == "bm25":
        for term_id in set(_query_term_ids(index, query)):
            for pos, tf in index.postings[term_id]:
                scores[pos] += _bm25_term(index, term_id, tf, int(index.lengths[pos]), k1, b)
    else:
        q_vec = _tfidf_query_vector(index, query)
        q_norm = math.sqrt(sum(w * w for w in q_vec.values()))
        if q_norm > 0.0:
            for term_id, w in q_vec.items():
                idf = index.idf_tfidf(term_id)
                for pos, tf in index.postings[term_id]:
                    scores[pos] += w * (1.0 + math.log(tf)) * idf
            nonzero = index.tfidf_norms > 0.0
            scores[nonzero] /= q_norm * index.tfidf_norms[nonzero]
            scores[~nonzero] = 0.0

    grouped: dict[str, list[tuple[str, float]]] = {}
    for pos, review_id in enumerate(index.review_ids):
        grouped.setdefault(index.review_items[pos], []).append((review_id, float(scores[pos])))
    for item_scores in grouped.values():
        item_scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return grouped
