"""Learn per-item embeddings by contrastive gradient descent with the encoder frozen.

Item vectors start from the per-item mean of review embeddings (average early
fusion) and are updated by Adam on the softmax contrastive loss: each batch
pairs N distinct items with one of their own reviews as the positive; the
other items' positives in the batch serve as negatives. Review embeddings
never change here; refreshing them is the encoder bridge's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, Query
from .dense import EmbeddingStore, ItemEmbeddingTable
from .fusion import ItemRanking, average_ef, rank_items_ef
from .seeding import substream


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    batch_size: int = 48
    epochs: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    per_item_count: int = 1    # positives drawn per item per epoch, without replacement
    patience: int = 5          # early stop after this many epochs without min_delta progress
    min_delta: float = 1e-4

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.batch_size < 2:
            raise ValueError("batch size must be >= 2")
        if self.epochs < 0 or self.per_item_count < 1:
            raise ValueError("epochs must be >= 0 and per_item_count >= 1")


class Adam:
    """Bias-corrected Adam over a keyed parameter family."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def step(self, key: str, param: np.ndarray, grad: np.ndarray) -> None:
        m = self._m.get(key)
        if m is None:
            m = np.zeros_like(param)
            self._m[key] = m
            self._v[key] = np.zeros_like(param)
            self._t[key] = 0
        v = self._v[key]
        self._t[key] += 1
        t = self._t[key]
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1 ** t)
        v_hat = v / (1.0 - self.beta2 ** t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def batch_loss_and_grads(item_vecs: np.ndarray,
                         positive_vecs: np.ndarray) -> tuple[float, np.ndarray]:
    """Total in-batch contrastive loss and its gradient per item vector.

    Row j of the similarity matrix scores item j against every positive in
    the batch; the diagonal holds the true pair. Each item appears once per
    batch, so its gradient comes from its own row only.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        sims = item_vecs @ positive_vecs.T
        shifted = sims - sims.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        denom = exp.sum(axis=1)
        log_p = shifted.diagonal() - np.log(denom)
        p = exp / denom[:, None]
        grads = p @ positive_vecs - positive_vecs
    return float(-log_p.sum()), grads


def _epoch_positive_ids(corpus: Corpus, per_item_count: int,
                        rng: np.random.Generator) -> dict[str, list[str]]:
    """Per item, per_item_count review ids drawn without replacement, cycling."""
    out: dict[str, list[str]] = {}
    for item in corpus.items.values():
        ids = sorted(r.review_id for r in item.reviews)
        chosen: list[str] = []
        while len(chosen) < per_item_count:
            order = rng.permutation(len(ids))
            chosen.extend(ids[i] for i in order)
        out[item.item_id] = chosen[:per_item_count]
    return out


def cefr_train(corpus: Corpus, store: EmbeddingStore, config: TrainConfig,
               init_table: ItemEmbeddingTable | None = None
               ) -> tuple[ItemEmbeddingTable, list[dict]]:
    """Train item vectors; returns the table and a per-epoch mean-loss trace."""
    item_ids = list(corpus.items.keys())
    if config.batch_size > len(item_ids):
        raise ValueError(
            f"batch size {config.batch_size} exceeds the {len(item_ids)} corpus items"
        )
    table = (init_table or average_ef(store, corpus)).copy()
    missing = [i for i in item_ids if i not in table.vectors]
    if missing:
        raise ValueError(f"initial table lacks vectors for items {missing[:3]}")

    review_vecs = {
        r.review_id: np.asarray(store.vectors[r.review_id], dtype=np.float64)
        for r in corpus.reviews()
    }
    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.eps)
    rng = substream(config.seed, "cefr")
    trace: list[dict] = []
    best = np.inf
    stale = 0

    for epoch in range(config.epochs):
        positives = _epoch_positive_ids(corpus, config.per_item_count, rng)
        epoch_loss = 0.0
        n_tuples = 0
        for round_idx in range(config.per_item_count):
            order = [item_ids[i] for i in rng.permutation(len(item_ids))]
            chunks = [
                order[i : i + config.batch_size]
                for i in range(0, len(order), config.batch_size)
            ]
            if len(chunks) > 1 and len(chunks[-1]) < 2:
                chunks[-2].extend(chunks.pop())
            for chunk in chunks:
                anchors = np.vstack([table.vectors[i] for i in chunk])
                pos = np.vstack([review_vecs[positives[i][round_idx]] for i in chunk])
                loss, grads = batch_loss_and_grads(anchors, pos)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch}, items {chunk[:3]}..."
                    )
                epoch_loss += loss
                n_tuples += len(chunk)
                for row, item_id in enumerate(chunk):
                    optimizer.step(item_id, table.vectors[item_id], grads[row])
        mean_loss = epoch_loss / n_tuples
        trace.append({"epoch": epoch, "mean_loss": mean_loss})
        if best - mean_loss >= config.min_delta:
            stale = 0
        else:
            stale += 1
        best = min(best, mean_loss)
        if stale >= config.patience:
            break
    return table, trace


def ef_inference(table: ItemEmbeddingTable, query_store: EmbeddingStore,
                 queries: Sequence[Query]) -> list[ItemRanking]:
    """Rank all items for each query against the learned item vectors."""
    rankings = []
    for query in queries:
        q_vec = query_store.vectors.get(query.query_id)
        if q_vec is None:
            raise KeyError(f"no embedding for query {query.query_id!r}")
        rankings.append(rank_items_ef(table, q_vec, query_id=query.query_id))
    return rankings


def write_trace(trace: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in trace:
            handle.write(json.dumps(entry) + "\n")
