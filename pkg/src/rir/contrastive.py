"""Softmax contrastive loss over one positive and N-1 negatives, with analytic gradients.

Similarities are raw dot products (no temperature). The log-sum-exp is
computed with max subtraction so large similarities cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .sampling import TupleBatch


@dataclass
class LossInput:
    """Anchor, positive, and at least one negative vector, all of one dimension."""

    anchor: np.ndarray
    positive: np.ndarray
    negatives: np.ndarray  # shape (n_negatives, dim)

    def __post_init__(self) -> None:
        self.anchor = np.asarray(self.anchor, dtype=np.float64)
        self.positive = np.asarray(self.positive, dtype=np.float64)
        self.negatives = np.atleast_2d(np.asarray(self.negatives, dtype=np.float64))
        if self.negatives.shape[0] < 1:
            raise ValueError("at least one negative vector is required")
        dim = self.anchor.shape[-1]
        if self.anchor.ndim != 1 or self.positive.shape != (dim,) \
                or self.negatives.shape[1] != dim:
            raise ValueError(
                f"dimension mismatch: anchor {self.anchor.shape}, "
                f"positive {self.positive.shape}, negatives {self.negatives.shape}"
            )
        if not (np.isfinite(self.anchor).all() and np.isfinite(self.positive).all()
                and np.isfinite(self.negatives).all()):
            raise ValueError("non-finite values in loss input")


def _candidate_sims(inp: LossInput) -> np.ndarray:
    # index 0 is the positive, the rest are negatives
    candidates = np.vstack([inp.positive[None, :], inp.negatives])
    return candidates @ inp.anchor


def npair_loss(inp: LossInput) -> float:
    """Negative log softmax probability of the positive among all candidates."""
    sims = _candidate_sims(inp)
    shifted = sims - sims.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[0])


def npair_grad_anchor(inp: LossInput) -> np.ndarray:
    """d(loss)/d(anchor) = sum_c p_c * v_c - v_positive, p = softmax of similarities."""
    sims = _candidate_sims(inp)
    shifted = np.exp(sims - sims.max())
    p = shifted / shifted.sum()
    candidates = np.vstack([inp.positive[None, :], inp.negatives])
    return p @ candidates - inp.positive


def batch_loss(batch: "TupleBatch | None",
               anchor_vecs: Sequence[np.ndarray],
               positive_vecs: Sequence[np.ndarray],
               hard_neg_vecs: Sequence[Sequence[np.ndarray]] | None = None) -> float:
    """Total loss over a batch with in-batch negatives.

    Tuple j's negatives are the positives of every other tuple, plus tuple
    j's own explicit hard negatives. Vector sequences align with the batch's
    tuple order; `batch` may be None when only raw vectors are available.
    """
    anchors = [np.asarray(v, dtype=np.float64) for v in anchor_vecs]
    positives = [np.asarray(v, dtype=np.float64) for v in positive_vecs]
    n = len(anchors)
    if n < 2:
        raise ValueError("a batch needs at least two tuples for in-batch negatives")
    if len(positives) != n:
        raise ValueError("anchor and positive counts differ")
    if hard_neg_vecs is None:
        hard_neg_vecs = [[] for _ in range(n)]
    if len(hard_neg_vecs) != n:
        raise ValueError("hard negative list count differs from batch size")
    if batch is not None:
        if len(batch.tuples) != n:
            raise ValueError("vector count does not match batch size")
        items = [t.item_id for t in batch.tuples]
        if len(set(items)) != n:
            raise ValueError("batch anchors must come from distinct items")
    total = 0.0
    for j in range(n):
        negatives = [positives[j2] for j2 in range(n) if j2 != j]
        negatives.extend(np.asarray(v, dtype=np.float64) for v in hard_neg_vecs[j])
        total += npair_loss(LossInput(anchors[j], positives[j], np.vstack(negatives)))
    return total
