"""Fine-tune an encoder on exported tuples with the in-batch n-pair objective.

The loss here must stay numerically interchangeable with the retrieval
package's batch loss (no temperature, no normalization): the first batch of
every epoch is cross-checked against that implementation on the emitted
vectors and training aborts on divergence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from rir.contrastive import batch_loss as reference_batch_loss

from .encoder import POOLINGS, TextEncoder
from .tuples import Batch, TupleFileError, load_batches

CROSS_CHECK_TOLERANCE = 1e-4


@dataclass
class BridgeConfig:
    tuples: str
    encoder: str
    pooling: str = "CLS"
    learning_rate: float = 1e-5
    batch_size: int = 48
    epochs: int = 1
    seed: int = 0
    review_out: str = "reviews.rire"
    query_out: str = "queries.rire"
    val_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch size must be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


def npair_batch_loss(anchors: torch.Tensor, positives: torch.Tensor,
                     hard_negatives: list[torch.Tensor]) -> torch.Tensor:
    """Sum over tuples of -log softmax(positive | candidates).

    Tuple j's candidates are its positive, every other tuple's positive,
    and its own hard negatives. Plain dot products, no scaling.
    """
    n = anchors.shape[0]
    if n < 2:
        raise ValueError("a batch needs at least two tuples for in-batch negatives")
    sims = anchors @ positives.T
    total = sims.new_zeros(())
    for j in range(n):
        row = sims[j]
        logits = torch.cat([row[j:j + 1], row[:j], row[j + 1:]])
        if hard_negatives[j].shape[0]:
            logits = torch.cat([logits, hard_negatives[j] @ anchors[j]])
        total = total + torch.logsumexp(logits, dim=0) - logits[0]
    return total


def _encode_batch(encoder: TextEncoder, batch: Batch, train: bool):
    """One forward pass over all of a batch's texts, then split."""
    texts = list(batch.anchors) + list(batch.positives)
    hard_offsets = []
    for hards in batch.hard_negatives:
        hard_offsets.append(len(texts))
        texts.extend(hards)
    vectors = encoder.encode(texts, train=train)
    n = len(batch)
    anchors = vectors[:n]
    positives = vectors[n:2 * n]
    hard = [
        vectors[offset:offset + len(hards)]
        for offset, hards in zip(hard_offsets, batch.hard_negatives)
    ]
    return anchors, positives, hard


def _cross_check(loss: float, anchors, positives, hard) -> float:
    reference = reference_batch_loss(
        None,
        [v.detach().numpy() for v in anchors],
        [v.detach().numpy() for v in positives],
        [[v.detach().numpy() for v in hards] for hards in hard],
    )
    rel = abs(loss - reference) / max(abs(reference), 1e-30)
    if rel > CROSS_CHECK_TOLERANCE:
        raise RuntimeError(
            f"objective drift: bridge loss {loss!r} vs reference {reference!r} "
            f"(relative {rel:.2e} > {CROSS_CHECK_TOLERANCE})")
    return rel


def _epoch_mean_loss(encoder: TextEncoder, batches: list[Batch]) -> float:
    total = 0.0
    for batch in batches:
        anchors, positives, hard = _encode_batch(encoder, batch, train=False)
        total += float(npair_batch_loss(anchors, positives, hard))
    return total / len(batches)


def train_encoder(config: BridgeConfig) -> tuple[TextEncoder, list[dict]]:
    """Train on the tuple file; returns the encoder and a per-epoch trace.

    Trace records carry the epoch's mean loss, the loss on batch 0 before
    its update, the cross-check's relative gap, and (with val_fraction > 0)
    the mean loss over held-out batches.
    """
    batches = load_batches(config.tuples)
    if len(batches[0]) != config.batch_size:
        raise TupleFileError(
            f"config batch size {config.batch_size} does not match the "
            f"tuple file's batches of {len(batches[0])}")
    torch.manual_seed(config.seed)
    encoder = TextEncoder.load(config.encoder, pooling=config.pooling)

    n_val = int(len(batches) * config.val_fraction)
    train_batches = batches[:len(batches) - n_val]
    val_batches = batches[len(batches) - n_val:]
    if not train_batches:
        raise TupleFileError("val_fraction leaves no training batches")

    optimizer = torch.optim.Adam(encoder.model.parameters(),
                                 lr=config.learning_rate)
    trace: list[dict] = []
    for epoch in range(config.epochs):
        losses = []
        check_rel = None
        for index, batch in enumerate(train_batches):
            anchors, positives, hard = _encode_batch(encoder, batch, train=True)
            loss = npair_batch_loss(anchors, positives, hard)
            value = loss.detach().item()
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite loss {value!r} at epoch {epoch}, "
                                   f"batch {index}")
            if index == 0:
                check_rel = _cross_check(value, anchors, positives, hard)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(value)
        record = {
            "epoch": epoch,
            "mean_loss": sum(losses) / len(losses),
            "batch0_loss": losses[0],
            "cross_check_rel": check_rel,
        }
        if val_batches:
            record["val_loss"] = _epoch_mean_loss(encoder, val_batches)
        trace.append(record)
    return encoder, trace


def write_trace(trace: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in trace:
            handle.write(json.dumps(record) + "\n")
