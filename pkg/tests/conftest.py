"""Shared fixtures; random builders live in helpers.py."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from rir.corpus import Corpus, Item, Review, build_corpus


@pytest.fixture
def toy3() -> Corpus:
    """Three single-review items with the classic d1/d2/d3 texts."""
    items = [
        Item("i1", "one", (), (Review("d1", "i1", "red fish", 4),)),
        Item("i2", "two", (), (Review("d2", "i2", "red red wine", 5),)),
        Item("i3", "three", (), (Review("d3", "i3", "blue sky", 3),)),
    ]
    return build_corpus(items)


@pytest.fixture
def two_item_corpus() -> Corpus:
    items = [
        Item("i1", "Pizza Place", ("italian",), (
            Review("r1", "i1", "the red sauce pizza was great and cheap", 5),
            Review("r2", "i1", "good pizza, slow service on weekends", 4),
            Review("r3", "i1", "crust was fresh. sauce was salty!", 5),
        )),
        Item("i2", "Burger Bar", ("american", "bar"), (
            Review("r4", "i2", "red interior, juicy burgers, loud music", 4),
            Review("r5", "i2", "fries were soggy but the shake was great", 3),
        )),
    ]
    return build_corpus(items)
