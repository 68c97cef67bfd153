"""Fixed embedding stores, the RIRE binary interchange format, and dot-product scoring.

RIRE layout (all integers little-endian):
  magic "RIRE" | version u16 = 1 | dim u32 | count u64 |
  count rows of: id length u16, id bytes (UTF-8), dim float32 values.

Vectors are stored as float32 on disk and loaded bit-exactly; dot products
accumulate in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus

MAGIC = b"RIRE"
VERSION = 1


class EmbeddingIOError(ValueError):
    """Malformed RIRE file."""


@dataclass(eq=False)
class EmbeddingStore:
    """id -> float32 vector map with a single fixed dimension."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    kind: str = "review"

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(eq=False)
class ItemEmbeddingTable:
    """Learnable per-item vectors; float64 while training, float32 on disk."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    init_source: str = "average_ef"

    def copy(self) -> "ItemEmbeddingTable":
        return ItemEmbeddingTable(
            dim=self.dim,
            vectors={k: v.copy() for k, v in self.vectors.items()},
            init_source=self.init_source,
        )

    def as_store(self, kind: str = "item") -> EmbeddingStore:
        return EmbeddingStore(
            dim=self.dim,
            vectors={k: v.astype(np.float32) for k, v in self.vectors.items()},
            kind=kind,
        )


def load_embeddings(path: str | Path, kind: str = "review") -> EmbeddingStore:
    """Read a RIRE file bit-exactly; row order is preserved."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise EmbeddingIOError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 18:
        raise EmbeddingIOError(f"{path}: truncated header")
    version, dim, count = struct.unpack_from("<HIQ", data, 4)
    if version != VERSION:
        raise EmbeddingIOError(f"{path}: unsupported version {version}")
    if dim == 0:
        raise EmbeddingIOError(f"{path}: dimension is zero")
    offset = 18
    row_bytes = 4 * dim
    vectors: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 2 > len(data):
            raise EmbeddingIOError(f"{path}: truncated (expected {count} rows, got {len(vectors)})")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + row_bytes > len(data):
            raise EmbeddingIOError(f"{path}: truncated (expected {count} rows, got {len(vectors)})")
        vec_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        if vec_id in vectors:
            raise EmbeddingIOError(f"{path}: duplicate id {vec_id!r}")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += row_bytes
        vectors[vec_id] = vec
    if offset != len(data):
        raise EmbeddingIOError(f"{path}: {len(data) - offset} trailing bytes after {count} rows")
    return EmbeddingStore(dim=dim, vectors=vectors, kind=kind)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<HIQ", VERSION, store.dim, len(store.vectors)))
        for vec_id, vec in store.vectors.items():
            encoded = vec_id.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(np.asarray(vec, dtype="<f4").tobytes())


def load_item_table(path: str | Path) -> ItemEmbeddingTable:
    store = load_embeddings(path, kind="item")
    return ItemEmbeddingTable(
        dim=store.dim,
        vectors={k: v.astype(np.float64) for k, v in store.vectors.items()},
        init_source="file",
    )


def similarity(q_vec: np.ndarray, r_vec: np.ndarray) -> float:
    """Dot product accumulated in float64."""
    q = np.asarray(q_vec)
    r = np.asarray(r_vec)
    if q.shape != r.shape:
        raise ValueError(f"dimension mismatch: {q.shape} vs {r.shape}")
    return float(np.dot(q.astype(np.float64), r.astype(np.float64)))


def score_reviews(store: EmbeddingStore, q_vec: np.ndarray,
                  corpus: Corpus) -> dict[str, list[tuple[str, float]]]:
    """Score every corpus review against the query vector, grouped per item.

    Lists are sorted by descending score with review_id breaking ties.
    """
    q = np.asarray(q_vec, dtype=np.float64)
    grouped: dict[str, list[tuple[str, float]]] = {}
    for item in corpus.items.values():
        scored = []
        for review in item.reviews:
            vec = store.vectors.get(review.review_id)
            if vec is None:
                raise KeyError(f"no embedding for review {review.review_id!r}")
            scored.append((review.review_id, similarity(q, vec)))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        grouped[item.item_id] = scored
    return grouped
