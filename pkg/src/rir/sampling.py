"""Self-supervised contrastive tuple construction from the item-review structure.

Positive strategies:
  SI        another review of the anchor's item, sampled uniformly
  SI_SR     same item and same user rating
  LS_SI     same item, minimal dot product with the anchor embedding
  LS_SI_SR  same item and rating, minimal dot product
  ICT       two mutually exclusive token spans of one review
  IC        two independent (possibly overlapping) token spans of one review

Anchor modes FULL / SASP (random span) / SASN (random sentence) shorten the
anchor toward query length; positives and negatives stay full reviews.
Negative strategies: IB (in-batch only) or IB_HN (plus one mined hard
negative per tuple).

All randomness is drawn from per-item substreams keyed by (seed, item_id),
so output is independent of item scheduling and byte-stable across runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, Review
from .dense import EmbeddingStore
from .seeding import substream

POSITIVE_STRATEGIES = ("SI", "SI_SR", "LS_SI", "LS_SI_SR", "ICT", "IC")
ANCHOR_MODES = ("FULL", "SASP", "SASN")
NEGATIVE_STRATEGIES = ("IB", "IB_HN")

_SI_FAMILY = ("SI", "SI_SR", "LS_SI", "LS_SI_SR")
_SENTENCE_RE = re.compile(r"[^.!?]*[.!?]+|[^.!?]+")


class SamplingError(ValueError):
    """Infeasible sampling request."""


@dataclass(frozen=True)
class TupleProvenance:
    positive_strategy: str          # requested
    applied_strategy: str           # after any per-anchor fallback
    anchor_mode: str
    negative_strategy: str

    @property
    def fallback(self) -> bool:
        return self.applied_strategy != self.positive_strategy


@dataclass(frozen=True)
class ContrastiveTuple:
    anchor: str
    anchor_review_id: str
    item_id: str
    positive_id: str
    positive: str
    hard_negative_ids: tuple[str, ...]
    hard_negatives: tuple[str, ...]
    provenance: TupleProvenance
    seed: int


@dataclass(frozen=True)
class TupleBatch:
    tuples: tuple[ContrastiveTuple, ...]

    def __post_init__(self) -> None:
        items = [t.item_id for t in self.tuples]
        if len(set(items)) != len(items):
            raise SamplingError("batch anchors must come from pairwise-distinct items")


@dataclass
class SamplingConfig:
    positive_strategy: str
    anchor_mode: str = "FULL"
    negative_strategy: str = "IB"
    per_item_count: int = 20
    batch_size: int = 48
    seed: int = 0
    span_min: int = 5
    span_max: int = 32

    def __post_init__(self) -> None:
        if self.positive_strategy not in POSITIVE_STRATEGIES:
            raise ValueError(f"unknown positive strategy {self.positive_strategy!r}")
        if self.anchor_mode not in ANCHOR_MODES:
            raise ValueError(f"unknown anchor mode {self.anchor_mode!r}")
        if self.negative_strategy not in NEGATIVE_STRATEGIES:
            raise ValueError(f"unknown negative strategy {self.negative_strategy!r}")
        if self.positive_strategy in ("ICT", "IC") and self.anchor_mode != "FULL":
            raise ValueError("anchor sub-sampling applies only to same-item strategies")
        if self.per_item_count < 1:
            raise ValueError("per_item_count must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if not 1 <= self.span_min <= self.span_max:
            raise ValueError("need 1 <= span_min <= span_max")


def _needs_store(config: SamplingConfig) -> bool:
    return config.positive_strategy.startswith("LS") or config.negative_strategy == "IB_HN"


def sample_positive(corpus: Corpus, store: EmbeddingStore | None,
                    anchor_review: Review, strategy: str,
                    rng: np.random.Generator) -> Review:
    """Draw a positive review for the anchor under one same-item strategy."""
    if strategy not in _SI_FAMILY:
        raise ValueError(f"{strategy!r} is not a same-item positive strategy")
    item = corpus.items[anchor_review.item_id]
    candidates = [r for r in item.reviews if r.review_id != anchor_review.review_id]
    if "SR" in strategy:
        candidates = [r for r in candidates if r.rating == anchor_review.rating]
    if not candidates:
        raise SamplingError(
            f"no eligible positive for review {anchor_review.review_id!r} under {strategy}"
        )
    candidates.sort(key=lambda r: r.review_id)
    if strategy.startswith("LS"):
        if store is None:
            raise ValueError("least-similar strategies require an embedding store")
        anchor_vec = np.asarray(store.vectors[anchor_review.review_id], dtype=np.float64)
        sims = [
            float(anchor_vec @ np.asarray(store.vectors[r.review_id], dtype=np.float64))
            for r in candidates
        ]
        best = min(range(len(candidates)), key=lambda i: (sims[i], candidates[i].review_id))
        return candidates[best]
    return candidates[int(rng.integers(len(candidates)))]


class HardNegativeMiner:
    """Most-similar other-item review per anchor, cached per store snapshot."""

    def __init__(self, corpus: Corpus, store: EmbeddingStore):
        self._review_ids: list[str] = []
        self._item_ids: list[str] = []
        rows = []
        for review in corpus.reviews():
            vec = store.vectors.get(review.review_id)
            if vec is None:
                raise KeyError(f"no embedding for review {review.review_id!r}")
            self._review_ids.append(review.review_id)
            self._item_ids.append(review.item_id)
            rows.append(np.asarray(vec, dtype=np.float64))
        if len(set(self._item_ids)) < 2:
            raise SamplingError("hard negatives need at least two items")
        self._matrix = np.vstack(rows)
        self._items_arr = np.asarray(self._item_ids)
        self._pos = {rid: i for i, rid in enumerate(self._review_ids)}
        self._text = {r.review_id: r for r in corpus.reviews()}
        self._cache: dict[str, str] = {}

    def select(self, anchor_review: Review) -> Review:
        cached = self._cache.get(anchor_review.review_id)
        if cached is not None:
            return self._text[cached]
        anchor_vec = self._matrix[self._pos[anchor_review.review_id]]
        sims = self._matrix @ anchor_vec
        eligible = self._items_arr != anchor_review.item_id
        best_sim = sims[eligible].max()
        tied = [
            self._review_ids[i]
            for i in np.flatnonzero(eligible & (sims == best_sim))
        ]
        choice = min(tied)
        self._cache[anchor_review.review_id] = choice
        return self._text[choice]


def select_hard_negative(store: EmbeddingStore, anchor_review: Review,
                         corpus: Corpus) -> Review:
    """One-shot mining; use HardNegativeMiner directly for repeated queries."""
    return HardNegativeMiner(corpus, store).select(anchor_review)


def split_sentences(text: str) -> list[str]:
    """Naive terminator-based sentence split; the rule is pinned, not clever."""
    parts = [p.strip() for p in _SENTENCE_RE.findall(text)]
    return [p for p in parts if p]


def subsample_anchor(review_text: str, mode: str, rng: np.random.Generator,
                     span_min: int = 5, span_max: int = 32) -> str:
    """Shorten an anchor to a random token span (SASP) or sentence (SASN)."""
    if mode == "SASP":
        tokens = review_text.split()
        if not tokens:
            raise ValueError("cannot subsample empty text")
        lo = min(span_min, len(tokens))
        hi = min(span_max, len(tokens))
        length = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(0, len(tokens) - length + 1))
        return " ".join(tokens[start : start + length])
    if mode == "SASN":
        sentences = split_sentences(review_text)
        if not sentences:
            raise ValueError("cannot subsample empty text")
        if len(sentences) == 1:
            return review_text
        return sentences[int(rng.integers(len(sentences)))]
    raise ValueError(f"unknown anchor mode {mode!r}")


def ict_pair(review_text: str, rng: np.random.Generator) -> tuple[str, str]:
    """Two mutually exclusive spans: a uniform split point, random side order."""
    tokens = review_text.split()
    if len(tokens) < 2:
        raise SamplingError("need at least two tokens to split")
    cut = int(rng.integers(1, len(tokens)))
    left, right = " ".join(tokens[:cut]), " ".join(tokens[cut:])
    if int(rng.integers(2)):
        return right, left
    return left, right


def ic_pair(review_text: str, rng: np.random.Generator) -> tuple[str, str]:
    """Two independently sampled spans; overlap is permitted."""
    tokens = review_text.split()
    if len(tokens) < 2:
        raise SamplingError("need at least two tokens to crop")
    spans = []
    for _ in range(2):
        length = int(rng.integers(1, len(tokens) + 1))
        start = int(rng.integers(0, len(tokens) - length + 1))
        spans.append(" ".join(tokens[start : start + length]))
    return spans[0], spans[1]


def _eligible_items(corpus: Corpus, config: SamplingConfig) -> list[str]:
    out = []
    for item in corpus.items.values():
        if config.positive_strategy in _SI_FAMILY:
            if len(item.reviews) >= 2:
                out.append(item.item_id)
        else:
            if any(len(r.text.split()) >= 2 for r in item.reviews):
                out.append(item.item_id)
    return out


def _item_tuples(corpus: Corpus, store: EmbeddingStore | None,
                 miner: HardNegativeMiner | None, item_id: str,
                 config: SamplingConfig) -> list[ContrastiveTuple]:
    rng = substream(config.seed, "sampling", item_id)
    item = corpus.items[item_id]
    tuples: list[ContrastiveTuple] = []

    if config.positive_strategy in _SI_FAMILY:
        anchors = sorted(item.reviews, key=lambda r: r.review_id)
        anchor_order = list(rng.permutation(len(anchors)))
        use_counts: dict[str, int] = {}
        for n in range(config.per_item_count):
            anchor = anchors[anchor_order[n % len(anchor_order)]]
            strategy = config.positive_strategy
            try:
                positive = _diversified_positive(
                    corpus, store, anchor, strategy, rng, use_counts
                )
                applied = strategy
            except SamplingError:
                # no same-rating partner for this anchor: drop the SR constraint
                applied = strategy.replace("_SR", "")
                positive = _diversified_positive(
                    corpus, store, anchor, applied, rng, use_counts
                )
            use_counts[positive.review_id] = use_counts.get(positive.review_id, 0) + 1
            anchor_text = anchor.text
            if config.anchor_mode != "FULL":
                anchor_text = subsample_anchor(
                    anchor.text, config.anchor_mode, rng,
                    config.span_min, config.span_max,
                )
            tuples.append(_finish_tuple(
                anchor_text, anchor, positive.review_id, positive.text,
                applied, miner, config,
            ))
    else:
        sources = sorted(
            (r for r in item.reviews if len(r.text.split()) >= 2),
            key=lambda r: r.review_id,
        )
        for _ in range(config.per_item_count):
            source = sources[int(rng.integers(len(sources)))]
            pair = ict_pair if config.positive_strategy == "ICT" else ic_pair
            anchor_text, positive_text = pair(source.text, rng)
            tuples.append(_finish_tuple(
                anchor_text, source, source.review_id, positive_text,
                config.positive_strategy, miner, config,
            ))
    return tuples


def _diversified_positive(corpus, store, anchor, strategy, rng,
                          use_counts: dict[str, int]) -> Review:
    """Same-item positive, drawn uniformly among the least-used candidates.

    Cycling through least-used reviews realizes without-replacement sampling
    across one item's tuple set whenever enough distinct candidates exist.
    """
    if strategy.startswith("LS"):
        return sample_positive(corpus, store, anchor, strategy, rng)
    item = corpus.items[anchor.item_id]
    candidates = [r for r in item.reviews if r.review_id != anchor.review_id]
    if "SR" in strategy:
        candidates = [r for r in candidates if r.rating == anchor.rating]
    if not candidates:
        raise SamplingError(
            f"no eligible positive for review {anchor.review_id!r} under {strategy}"
        )
    least = min(use_counts.get(r.review_id, 0) for r in candidates)
    pool = sorted(
        (r for r in candidates if use_counts.get(r.review_id, 0) == least),
        key=lambda r: r.review_id,
    )
    return pool[int(rng.integers(len(pool)))]


def _finish_tuple(anchor_text: str, anchor: Review, positive_id: str,
                  positive_text: str, applied: str,
                  miner: HardNegativeMiner | None,
                  config: SamplingConfig) -> ContrastiveTuple:
    hard_ids: tuple[str, ...] = ()
    hard_texts: tuple[str, ...] = ()
    if config.negative_strategy == "IB_HN":
        hard = miner.select(anchor)
        hard_ids = (hard.review_id,)
        hard_texts = (hard.text,)
    return ContrastiveTuple(
        anchor=anchor_text,
        anchor_review_id=anchor.review_id,
        item_id=anchor.item_id,
        positive_id=positive_id,
        positive=positive_text,
        hard_negative_ids=hard_ids,
        hard_negatives=hard_texts,
        provenance=TupleProvenance(
            positive_strategy=config.positive_strategy,
            applied_strategy=applied,
            anchor_mode=config.anchor_mode,
            negative_strategy=config.negative_strategy,
        ),
        seed=config.seed,
    )


def build_tuple_set(corpus: Corpus, store: EmbeddingStore | None,
                    config: SamplingConfig) -> tuple[list[ContrastiveTuple], list[TupleBatch]]:
    """Build per_item_count tuples per eligible item plus size-N batches.

    Tuples are interleaved round-robin over items, so any N consecutive
    tuples come from N distinct items (N <= number of eligible items).
    Trailing tuples that do not fill a final batch are returned in the tuple
    list but belong to no batch.
    """
    if _needs_store(config) and store is None:
        raise ValueError(f"{config.positive_strategy}/{config.negative_strategy} "
                         "sampling requires an embedding store")
    eligible = _eligible_items(corpus, config)
    if len(eligible) < config.batch_size:
        raise SamplingError(
            f"batch size {config.batch_size} exceeds the {len(eligible)} items "
            "with eligible tuples"
        )
    miner = None
    if config.negative_strategy == "IB_HN":
        miner = HardNegativeMiner(corpus, store)
    per_item = {
        item_id: _item_tuples(corpus, store, miner, item_id, config)
        for item_id in eligible
    }
    interleaved = [
        per_item[item_id][round_idx]
        for round_idx in range(config.per_item_count)
        for item_id in eligible
    ]
    n = config.batch_size
    batches = [
        TupleBatch(tuple(interleaved[i : i + n]))
        for i in range(0, len(interleaved) - n + 1, n)
    ]
    return interleaved, batches


def export_tuples(batches: Sequence[TupleBatch], path: str | Path) -> None:
    """Write batched tuples as JSONL; batch boundaries carried by batch_index."""
    with open(path, "w", encoding="utf-8") as handle:
        for batch_index, batch in enumerate(batches):
            for t in batch.tuples:
                record = {
                    "anchor": t.anchor,
                    "positive": t.positive,
                    "hard_negatives": list(t.hard_negatives),
                    "item_id": t.item_id,
                    "provenance": {
                        "positive_strategy": t.provenance.positive_strategy,
                        "applied_strategy": t.provenance.applied_strategy,
                        "anchor_mode": t.provenance.anchor_mode,
                        "negative_strategy": t.provenance.negative_strategy,
                    },
                    "seed": t.seed,
                    "batch_index": batch_index,
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_tuple_export(path: str | Path) -> list[dict]:
    """Parse a tuple export back into records, with basic schema checks."""
    records: list[dict] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                for key in ("anchor", "positive", "hard_negatives", "item_id",
                            "provenance", "seed", "batch_index"):
                    if key not in record:
                        raise KeyError(key)
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: bad tuple record at line {lineno}: {exc}") from None
            records.append(record)
    return records
