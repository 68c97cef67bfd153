"""Aggregate query-review scores into query-item rankings.

Late fusion averages each item's top-K review scores; early fusion scores a
single per-item vector directly against the query. K may be any positive
integer or the sentinel ALL, which always means "this item's full review set"
and is therefore kept distinct from every integer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .corpus import Corpus
from .dense import EmbeddingStore, ItemEmbeddingTable, similarity

ALL = "all"
KValue = Union[int, str]


def _check_k(k: KValue) -> KValue:
    if k == ALL:
        return k
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError(f"K must be a positive integer or ALL, got {k!r}")
    return k


@dataclass(frozen=True)
class ItemRanking:
    """Total ordering over corpus items for one query; scores non-increasing."""

    query_id: str
    ranking: tuple[tuple[str, float], ...]
    mode: str = "lf"        # "lf" | "ef"
    k: KValue | None = None


def late_fuse(item_scores: Sequence[float], k: KValue) -> float:
    """Mean of the top-min(K, n) scores; K=ALL averages all of them."""
    _check_k(k)
    if len(item_scores) == 0:
        raise ValueError("cannot fuse an empty score list")
    ordered = sorted(item_scores, reverse=True)
    take = len(ordered) if k == ALL else min(k, len(ordered))
    return float(sum(ordered[:take]) / take)


def rank_items_lf(per_item_scores: Mapping[str, Sequence[tuple[str, float]]],
                  k: KValue, query_id: str = "") -> ItemRanking:
    """Rank items by fused score, descending; ties broken by item_id."""
    _check_k(k)
    if not per_item_scores:
        raise ValueError("no items to rank")
    fused = [
        (item_id, late_fuse([score for _, score in scored], k))
        for item_id, scored in per_item_scores.items()
    ]
    fused.sort(key=lambda pair: (-pair[1], pair[0]))
    return ItemRanking(query_id=query_id, ranking=tuple(fused), mode="lf", k=k)


def average_ef(store: EmbeddingStore, corpus: Corpus) -> ItemEmbeddingTable:
    """Per item, the arithmetic mean of its review embeddings."""
    vectors: dict[str, np.ndarray] = {}
    for item in corpus.items.values():
        if not item.reviews:
            raise ValueError(f"item {item.item_id!r} has no reviews to average")
        rows = []
        for review in item.reviews:
            vec = store.vectors.get(review.review_id)
            if vec is None:
                raise KeyError(f"no embedding for review {review.review_id!r}")
            rows.append(np.asarray(vec, dtype=np.float64))
        vectors[item.item_id] = np.mean(rows, axis=0)
    return ItemEmbeddingTable(dim=store.dim, vectors=vectors, init_source="average_ef")


def rank_items_ef(table: ItemEmbeddingTable, q_vec: np.ndarray,
                  query_id: str = "") -> ItemRanking:
    """Rank items by dot product with the query vector."""
    scored = [
        (item_id, similarity(q_vec, vec)) for item_id, vec in table.vectors.items()
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return ItemRanking(query_id=query_id, ranking=tuple(scored), mode="ef", k=None)


def write_run(rankings: Sequence[ItemRanking], path: str | Path) -> None:
    """One JSON record per query: {"query_id", "ranking": [{"item_id", "score"}]}."""
    with open(path, "w", encoding="utf-8") as handle:
        for ranking in rankings:
            record = {
                "query_id": ranking.query_id,
                "ranking": [
                    {"item_id": item_id, "score": score}
                    for item_id, score in ranking.ranking
                ],
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_run(path: str | Path) -> list[ItemRanking]:
    rankings: list[ItemRanking] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                ranking = tuple(
                    (entry["item_id"], float(entry["score"]))
                    for entry in record["ranking"]
                )
                rankings.append(ItemRanking(query_id=record["query_id"], ranking=ranking))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: bad run record at line {lineno}: {exc}") from None
    return rankings
