#!/usr/bin/env python3
"""Generate a synthetic corpus with aligned text and embedding signals.

Each item gets a few signature words that dominate its reviews and a matching
embedding cluster, so both the sparse and the dense retrieval paths can find
it. Writes corpus.jsonl, queries.jsonl, qrels.tsv, reviews.rire, queries.rire
into --outdir.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from rir import EmbeddingStore, Item, Review, build_corpus, save_corpus, save_embeddings

FILLER = ("the", "service", "was", "really", "place", "visit", "again",
          "staff", "came", "back", "order", "table")
SIGNATURE = ("espresso", "ramen", "taco", "bagel", "sushi", "curry", "pizza",
             "falafel", "pho", "gelato", "waffle", "dumpling", "paella",
             "burger", "kebab", "croissant", "pancake", "risotto", "samosa",
             "chowder")


def build(n_items: int, n_reviews: int, dim: int, seed: int):
    if n_items > len(SIGNATURE):
        raise SystemExit(f"at most {len(SIGNATURE)} items supported")
    if dim < n_items:
        raise SystemExit("embedding dim must be >= number of items")
    rng = np.random.default_rng(seed)
    items = []
    review_vecs = {}
    query_vecs = {}
    queries = []
    qrels = []
    for i in range(n_items):
        item_id = f"i{i:03d}"
        word = SIGNATURE[i]
        mean = np.zeros(dim)
        mean[i] = 1.0
        reviews = []
        for j in range(n_reviews):
            rid = f"{item_id}r{j:02d}"
            tokens = [word] * int(rng.integers(1, 4))
            tokens += list(rng.choice(FILLER, size=rng.integers(4, 9)))
            rng.shuffle(tokens)
            reviews.append(Review(
                review_id=rid, item_id=item_id,
                text=" ".join(tokens), rating=int(rng.integers(1, 6))))
            review_vecs[rid] = (mean + 0.1 * rng.normal(size=dim)).astype(np.float32)
        items.append(Item(item_id=item_id, name=f"{word} house",
                          categories=(word,), reviews=tuple(reviews)))
        qid = f"q{i:03d}"
        queries.append({"query_id": qid, "text": f"best {word} in town"})
        query_vecs[qid] = (mean + 0.05 * rng.normal(size=dim)).astype(np.float32)
        qrels.append((qid, item_id))
    corpus = build_corpus(items)
    return corpus, review_vecs, query_vecs, queries, qrels


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="toy_data")
    parser.add_argument("--items", type=int, default=12)
    parser.add_argument("--reviews", type=int, default=8)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus, review_vecs, query_vecs, queries, qrels = build(
        args.items, args.reviews, args.dim, args.seed)

    save_corpus(corpus, outdir / "corpus.jsonl")
    with open(outdir / "queries.jsonl", "w", encoding="utf-8") as handle:
        for record in queries:
            handle.write(json.dumps(record) + "\n")
    with open(outdir / "qrels.tsv", "w", encoding="utf-8") as handle:
        for qid, item_id in qrels:
            handle.write(f"{qid}\t{item_id}\n")
    save_embeddings(EmbeddingStore(dim=args.dim, vectors=review_vecs),
                    outdir / "reviews.rire")
    save_embeddings(EmbeddingStore(dim=args.dim, vectors=query_vecs, kind="query"),
                    outdir / "queries.rire")
    print(f"{corpus.n_items} items / {corpus.n_reviews} reviews -> {outdir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
