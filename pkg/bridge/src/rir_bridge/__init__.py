"""Encoder bridge: fine-tune a transformer on reviewed-item contrastive
tuples and emit embeddings the retrieval package can read."""

from .emit import CorpusFileError, embed_corpus, read_query_texts, read_review_texts
from .encoder import POOLINGS, REVIEW_TOKEN_LIMIT, TextEncoder
from .rire import write_rire
from .training import (
    CROSS_CHECK_TOLERANCE,
    BridgeConfig,
    npair_batch_loss,
    train_encoder,
    write_trace,
)
from .tuples import Batch, TupleFileError, load_batches

__all__ = [
    "Batch",
    "BridgeConfig",
    "CROSS_CHECK_TOLERANCE",
    "CorpusFileError",
    "POOLINGS",
    "REVIEW_TOKEN_LIMIT",
    "TextEncoder",
    "TupleFileError",
    "embed_corpus",
    "load_batches",
    "npair_batch_loss",
    "read_query_texts",
    "read_review_texts",
    "train_encoder",
    "write_rire",
    "write_trace",
]
