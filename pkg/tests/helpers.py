"""Random corpus/embedding builders shared across test modules."""

from __future__ import annotations

import numpy as np

from rir.corpus import Corpus, Item, Review, build_corpus
from rir.dense import EmbeddingStore

WORDS = (
    "pizza burger sushi noodle taco crust sauce spicy bland fresh stale cozy "
    "loud quiet friendly rude quick slow pricey cheap salty sweet juicy dry"
).split()


def random_corpus(rng: np.random.Generator, n_items: int = 5,
                  max_reviews: int = 6, min_reviews: int = 1,
                  max_tokens: int = 12, prefix: str = "") -> Corpus:
    """Small random corpus; ids are zero-padded so sort order is stable."""
    items = []
    for i in range(n_items):
        item_id = f"{prefix}i{i:03d}"
        n_rev = int(rng.integers(min_reviews, max_reviews + 1))
        reviews = []
        for j in range(n_rev):
            n_tok = int(rng.integers(1, max_tokens + 1))
            words = [WORDS[int(rng.integers(len(WORDS)))] for _ in range(n_tok)]
            reviews.append(Review(
                review_id=f"{prefix}i{i:03d}r{j:02d}",
                item_id=item_id,
                text=" ".join(words),
                rating=int(rng.integers(1, 6)),
            ))
        items.append(Item(item_id, f"place {i}", ("food",), tuple(reviews)))
    return build_corpus(items)


def random_store(corpus: Corpus, rng: np.random.Generator,
                 dim: int = 8) -> EmbeddingStore:
    """Float32 vectors for every review, normal entries."""
    vectors = {
        r.review_id: rng.normal(size=dim).astype(np.float32)
        for r in corpus.reviews()
    }
    return EmbeddingStore(dim=dim, vectors=vectors, kind="review")


def separable_toy(n_items: int = 10, n_reviews: int = 20, dim: int = 16,
                  sigma: float = 0.1, seed: int = 0):
    """Items with orthogonal embedding cluster means plus gaussian noise.

    Returns (corpus, review store, per-item mean query vectors). Review
    embeddings for item k cluster around basis vector e_k.
    """
    assert dim >= n_items
    rng = np.random.default_rng(seed)
    items = []
    vectors = {}
    queries = {}
    for i in range(n_items):
        item_id = f"i{i:02d}"
        mean = np.zeros(dim)
        mean[i] = 1.0
        reviews = []
        rows = []
        for j in range(n_reviews):
            rid = f"i{i:02d}r{j:02d}"
            vec = (mean + sigma * rng.normal(size=dim)).astype(np.float32)
            vectors[rid] = vec
            rows.append(vec.astype(np.float64))
            reviews.append(Review(rid, item_id, f"review {j} of item {i}", 5))
        queries[item_id] = np.mean(rows, axis=0)
        items.append(Item(item_id, item_id, (), tuple(reviews)))
    corpus = build_corpus(items)
    store = EmbeddingStore(dim=dim, vectors=vectors, kind="review")
    return corpus, store, queries
