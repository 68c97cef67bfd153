"""Writer for the RIRE binary embedding format.

Layout, little-endian: magic "RIRE", u16 version (1), u32 dimension,
u64 row count, then per row a u16 id byte length, the UTF-8 id, and
dimension float32 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"RIRE"
VERSION = 1


def write_rire(path: str | Path, dim: int, rows) -> int:
    """Write (id, vector) rows; returns the number of rows written."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    rows = list(rows)
    seen: set[str] = set()
    payload = bytearray(MAGIC)
    payload += struct.pack("<HIQ", VERSION, dim, len(rows))
    for row_id, vector in rows:
        if row_id in seen:
            raise ValueError(f"duplicate id {row_id!r}")
        seen.add(row_id)
        vec = np.asarray(vector, dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"row {row_id!r} has shape {vec.shape}, expected ({dim},)")
        id_bytes = row_id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"id {row_id!r} exceeds 65535 bytes")
        payload += struct.pack("<H", len(id_bytes))
        payload += id_bytes
        payload += vec.tobytes()
    Path(path).write_bytes(bytes(payload))
    return len(rows)
