"""Encode a corpus and its queries into RIRE files plus sidecar metadata."""

from __future__ import annotations

import json
from pathlib import Path

from .encoder import REVIEW_TOKEN_LIMIT, TextEncoder
from .rire import write_rire


class CorpusFileError(ValueError):
    """Malformed corpus or query file."""


def read_review_texts(path: str | Path) -> list[tuple[str, str]]:
    """(review_id, text) pairs from an item-per-line corpus file, in order."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFileError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            reviews = item.get("reviews")
            if not isinstance(reviews, list):
                raise CorpusFileError(f"line {lineno}: item record without reviews")
            for review in reviews:
                review_id, text = review.get("review_id"), review.get("text")
                if not isinstance(review_id, str) or not isinstance(text, str):
                    raise CorpusFileError(
                        f"line {lineno}: review needs string review_id and text")
                pairs.append((review_id, text))
    if not pairs:
        raise CorpusFileError(f"{path}: no reviews")
    return pairs


def read_query_texts(path: str | Path) -> list[tuple[str, str]]:
    """(query_id, text) pairs from a query-per-line file, in order."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                query = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFileError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            query_id, text = query.get("query_id"), query.get("text")
            if not isinstance(query_id, str) or not isinstance(text, str):
                raise CorpusFileError(
                    f"line {lineno}: query needs string query_id and text")
            pairs.append((query_id, text))
    if not pairs:
        raise CorpusFileError(f"{path}: no queries")
    return pairs


def _encode_rows(encoder: TextEncoder, pairs, limit, batch_size):
    rows = []
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        vectors = encoder.encode([text for _, text in chunk], limit=limit,
                                 log_truncation=True)
        rows.extend((pair_id, vec.numpy()) for (pair_id, _), vec in zip(chunk, vectors))
    return rows


def _sidecar(path: str | Path, encoder: TextEncoder, seed: int) -> None:
    record = {"encoder": encoder.name, "pooling": encoder.pooling, "seed": seed}
    with open(f"{path}.meta.json", "w", encoding="utf-8") as handle:
        json.dump(record, handle, sort_keys=True)
        handle.write("\n")


def embed_corpus(encoder: TextEncoder, corpus_path: str | Path,
                 queries_path: str | Path, review_out: str | Path,
                 query_out: str | Path, seed: int = 0,
                 batch_size: int = 32) -> dict:
    """Write one review store and one query store, with sidecar metadata.

    Inference runs in no-dropout mode, so output bytes are deterministic.
    Reviews truncate at the standard token limit; queries only at the
    model's position limit (truncations are logged either way).
    """
    reviews = read_review_texts(corpus_path)
    queries = read_query_texts(queries_path)
    review_rows = _encode_rows(encoder, reviews, REVIEW_TOKEN_LIMIT, batch_size)
    query_rows = _encode_rows(encoder, queries, None, batch_size)
    write_rire(review_out, encoder.dim, review_rows)
    write_rire(query_out, encoder.dim, query_rows)
    _sidecar(review_out, encoder, seed)
    _sidecar(query_out, encoder, seed)
    return {"reviews": len(review_rows), "queries": len(query_rows),
            "dim": encoder.dim}
