"""Reader for the contrastive tuple export format.

One JSON record per line with anchor/positive/hard_negatives texts, the
anchor's item_id, sampling provenance, a seed, and a batch_index. Records
are grouped into batches by batch_index; a batch's anchors come from
pairwise-distinct items.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class TupleFileError(ValueError):
    """Malformed or inconsistent tuple export."""


@dataclass(frozen=True)
class Batch:
    batch_index: int
    anchors: tuple[str, ...]
    positives: tuple[str, ...]
    hard_negatives: tuple[tuple[str, ...], ...]
    item_ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.anchors)


_REQUIRED = ("anchor", "positive", "hard_negatives", "item_id", "batch_index")


def _parse_record(line: str, lineno: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TupleFileError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(record, dict):
        raise TupleFileError(f"line {lineno}: expected an object")
    for key in _REQUIRED:
        if key not in record:
            raise TupleFileError(f"line {lineno}: missing field {key!r}")
    if not isinstance(record["anchor"], str) or not isinstance(record["positive"], str):
        raise TupleFileError(f"line {lineno}: anchor and positive must be strings")
    hard = record["hard_negatives"]
    if not isinstance(hard, list) or any(not isinstance(h, str) for h in hard):
        raise TupleFileError(f"line {lineno}: hard_negatives must be a list of strings")
    if not isinstance(record["batch_index"], int) or record["batch_index"] < 0:
        raise TupleFileError(f"line {lineno}: batch_index must be a non-negative integer")
    return record


def load_batches(path: str | Path) -> list[Batch]:
    """Group exported tuples into batches, in file order.

    Batch indices must be contiguous from zero, every batch must have the
    same size, and anchors within a batch must come from distinct items.
    """
    grouped: dict[int, list[dict]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = _parse_record(line, lineno)
            grouped.setdefault(record["batch_index"], []).append(record)
    if not grouped:
        raise TupleFileError(f"{path}: no tuples")
    indices = sorted(grouped)
    if indices != list(range(len(indices))):
        raise TupleFileError(f"{path}: batch indices are not contiguous from 0")
    sizes = {len(grouped[i]) for i in indices}
    if len(sizes) != 1:
        raise TupleFileError(f"{path}: inconsistent batch sizes {sorted(sizes)}")
    batches = []
    for index in indices:
        records = grouped[index]
        item_ids = [r["item_id"] for r in records]
        if len(set(item_ids)) != len(item_ids):
            raise TupleFileError(
                f"{path}: batch {index} repeats an item, in-batch negatives "
                "would collide")
        batches.append(Batch(
            batch_index=index,
            anchors=tuple(r["anchor"] for r in records),
            positives=tuple(r["positive"] for r in records),
            hard_negatives=tuple(tuple(r["hard_negatives"]) for r in records),
            item_ids=tuple(item_ids),
        ))
    return batches
