"""Two-level item/review corpus: loading, validation, and metadata transforms.

File formats (all UTF-8):
  corpus:  one JSON item record per line
           {"item_id", "name", "categories": [...], "reviews": [{"review_id", "text", "rating"}]}
  queries: one JSON record per line {"query_id", "text", "category"?}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator


class CorpusError(ValueError):
    """Malformed or inconsistent corpus, query, or qrels data."""


@dataclass(frozen=True)
class Review:
    review_id: str
    item_id: str
    text: str
    rating: int


@dataclass(frozen=True)
class Item:
    item_id: str
    name: str
    categories: tuple[str, ...]
    reviews: tuple[Review, ...]


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    category: str | None = None


@dataclass(frozen=True)
class Corpus:
    """Immutable item map; iteration order is load order."""

    items: dict[str, Item] = field(default_factory=dict)
    ppmd_applied: bool = False

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_reviews(self) -> int:
        return sum(len(item.reviews) for item in self.items.values())

    def reviews(self) -> Iterator[Review]:
        for item in self.items.values():
            yield from item.reviews

    def review_by_id(self, review_id: str) -> Review:
        for review in self.reviews():
            if review.review_id == review_id:
                return review
        raise KeyError(review_id)


def build_corpus(items: list[Item], ppmd_applied: bool = False) -> Corpus:
    """Assemble a Corpus, enforcing id uniqueness and membership invariants."""
    if not items:
        raise CorpusError("empty corpus")
    item_map: dict[str, Item] = {}
    seen_reviews: set[str] = set()
    for item in items:
        if item.item_id in item_map:
            raise CorpusError(f"duplicate item_id {item.item_id!r}")
        if not item.reviews:
            raise CorpusError(f"item {item.item_id!r} has no reviews")
        for review in item.reviews:
            if review.item_id != item.item_id:
                raise CorpusError(
                    f"review {review.review_id!r} carries item_id {review.item_id!r} "
                    f"inside item {item.item_id!r}"
                )
            if review.review_id in seen_reviews:
                raise CorpusError(f"duplicate review_id {review.review_id!r}")
            seen_reviews.add(review.review_id)
        item_map[item.item_id] = item
    return Corpus(items=item_map, ppmd_applied=ppmd_applied)


def _parse_review(obj: dict, item_id: str, lineno: int) -> Review:
    try:
        review_id = obj["review_id"]
        text = obj["text"]
        rating = obj["rating"]
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"line {lineno}: review record missing field {exc}") from None
    if not isinstance(review_id, str) or not review_id:
        raise CorpusError(f"line {lineno}: review_id must be a non-empty string")
    if not isinstance(text, str) or not text.strip():
        raise CorpusError(f"line {lineno}: review {review_id!r} has empty text")
    if isinstance(rating, bool) or not isinstance(rating, int) or not 1 <= rating <= 5:
        raise CorpusError(
            f"line {lineno}: review {review_id!r} rating {rating!r} is not an integer in 1..5"
        )
    return Review(review_id=review_id, item_id=item_id, text=text, rating=rating)


def _parse_item(obj: dict, lineno: int) -> Item:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: item record is not a JSON object")
    try:
        item_id = obj["item_id"]
        name = obj["name"]
        categories = obj["categories"]
        reviews = obj["reviews"]
    except KeyError as exc:
        raise CorpusError(f"line {lineno}: item record missing field {exc}") from None
    if not isinstance(item_id, str) or not item_id:
        raise CorpusError(f"line {lineno}: item_id must be a non-empty string")
    if not isinstance(name, str):
        raise CorpusError(f"line {lineno}: item {item_id!r} name must be a string")
    if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
        raise CorpusError(f"line {lineno}: item {item_id!r} categories must be a list of strings")
    if not isinstance(reviews, list) or not reviews:
        raise CorpusError(f"line {lineno}: item {item_id!r} has no reviews")
    parsed = tuple(_parse_review(r, item_id, lineno) for r in reviews)
    return Item(item_id=item_id, name=name, categories=tuple(categories), reviews=parsed)


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a newline-delimited item corpus."""
    items: list[Item] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            items.append(_parse_item(obj, lineno))
    return build_corpus(items)


def item_to_record(item: Item) -> dict:
    return {
        "item_id": item.item_id,
        "name": item.name,
        "categories": list(item.categories),
        "reviews": [
            {"review_id": r.review_id, "text": r.text, "rating": r.rating}
            for r in item.reviews
        ],
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item in corpus.items.values():
            handle.write(json.dumps(item_to_record(item), ensure_ascii=False) + "\n")


def ppmd_transform(corpus: Corpus) -> Corpus:
    """Prepend item category tags to every review text.

    Returns a new corpus; reviews of items without categories are unchanged.
    Rejects corpora that were already transformed so tags are never doubled.
    """
    if corpus.ppmd_applied:
        raise CorpusError("corpus already has meta-data prepended")
    items: list[Item] = []
    for item in corpus.items.values():
        if item.categories:
            prefix = ", ".join(item.categories) + ". "
            reviews = tuple(
                Review(r.review_id, r.item_id, prefix + r.text, r.rating)
                for r in item.reviews
            )
        else:
            reviews = item.reviews
        items.append(Item(item.item_id, item.name, item.categories, reviews))
    return build_corpus(items, ppmd_applied=True)


def load_queries(path: str | Path) -> list[Query]:
    """Load a newline-delimited query file."""
    queries: list[Query] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            query_id = obj.get("query_id")
            text = obj.get("text")
            category = obj.get("category")
            if not isinstance(query_id, str) or not query_id:
                raise CorpusError(f"line {lineno}: query_id must be a non-empty string")
            if query_id in seen:
                raise CorpusError(f"line {lineno}: duplicate query_id {query_id!r}")
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"line {lineno}: query {query_id!r} has empty text")
            if category is not None and not isinstance(category, str):
                raise CorpusError(f"line {lineno}: query {query_id!r} category must be a string")
            seen.add(query_id)
            queries.append(Query(query_id=query_id, text=text, category=category))
    if not queries:
        raise CorpusError("empty query file")
    return queries
