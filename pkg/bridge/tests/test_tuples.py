import json

import pytest

from rir_bridge import TupleFileError, load_batches


def test_toy_export_groups_into_batches(toy_data):
    batches = load_batches(toy_data["tuples"])
    assert len(batches) == 10
    assert [b.batch_index for b in batches] == list(range(10))
    for batch in batches:
        assert len(batch) == 48
        assert len(batch.anchors) == len(batch.positives) == len(batch.item_ids)
        assert len(set(batch.item_ids)) == 48
        assert all(hards == () for hards in batch.hard_negatives)


def test_file_order_is_preserved(toy_data):
    records = [json.loads(line) for line in open(toy_data["tuples"], encoding="utf-8")]
    batches = load_batches(toy_data["tuples"])
    assert batches[0].anchors == tuple(r["anchor"] for r in records[:48])
    assert batches[3].positives == tuple(r["positive"] for r in records[144:192])


def test_hard_negatives_come_through(hard_negative_export):
    batches = load_batches(hard_negative_export)
    for batch in batches:
        for hards in batch.hard_negatives:
            assert len(hards) == 1
            assert isinstance(hards[0], str) and hards[0]


def _write(tmp_path, lines):
    path = tmp_path / "t.jsonl"
    path.write_text("\n".join(lines) + "\n")
    return path


def _record(**override):
    record = {"anchor": "a", "positive": "p", "hard_negatives": [],
              "item_id": "i1", "batch_index": 0}
    record.update(override)
    return json.dumps(record)


def test_missing_field_is_an_error(tmp_path):
    path = _write(tmp_path, [_record(), '{"anchor": "a"}'])
    with pytest.raises(TupleFileError, match="line 2.*missing field"):
        load_batches(path)


def test_invalid_json_is_an_error(tmp_path):
    path = _write(tmp_path, ["{nope"])
    with pytest.raises(TupleFileError, match="line 1.*invalid JSON"):
        load_batches(path)


def test_inconsistent_batch_sizes_rejected(tmp_path):
    path = _write(tmp_path, [
        _record(item_id="i1"), _record(item_id="i2"),
        _record(item_id="i1", batch_index=1),
    ])
    with pytest.raises(TupleFileError, match="inconsistent batch sizes"):
        load_batches(path)


def test_gap_in_batch_indices_rejected(tmp_path):
    path = _write(tmp_path, [_record(), _record(batch_index=2)])
    with pytest.raises(TupleFileError, match="not contiguous"):
        load_batches(path)


def test_repeated_item_within_batch_rejected(tmp_path):
    path = _write(tmp_path, [_record(item_id="i1"), _record(item_id="i1")])
    with pytest.raises(TupleFileError, match="repeats an item"):
        load_batches(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(TupleFileError, match="no tuples"):
        load_batches(path)
