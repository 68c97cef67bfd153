"""Named deterministic RNG substreams derived from a single top-level seed."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *names: str) -> np.random.Generator:
    """Return a Generator keyed by (seed, *names).

    Names are hashed with sha256 so streams are stable across processes
    (Python's builtin hash() is salted per interpreter run).
    """
    entropy = [int(seed)]
    for name in names:
        digest = hashlib.sha256(name.encode("utf-8")).digest()
        entropy.append(int.from_bytes(digest[:8], "little"))
    return np.random.default_rng(entropy)
