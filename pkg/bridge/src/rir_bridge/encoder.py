"""Thin wrapper around a transformer encoder: tokenize, pool, one vector per text."""

from __future__ import annotations

import logging

import torch
from transformers import AutoModel, AutoTokenizer

logger = logging.getLogger(__name__)

POOLINGS = ("CLS", "MEAN")
REVIEW_TOKEN_LIMIT = 256


class TextEncoder:
    """A loaded model + tokenizer with a fixed pooling choice.

    The same tower encodes anchors, positives, and queries. Reviews are
    truncated at REVIEW_TOKEN_LIMIT tokens; queries only at the model's
    position limit, which they stay under in practice.
    """

    def __init__(self, model, tokenizer, name: str, pooling: str = "CLS"):
        if pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
        self.model = model
        self.tokenizer = tokenizer
        self.name = name
        self.pooling = pooling

    @classmethod
    def load(cls, name_or_path: str, pooling: str = "CLS") -> "TextEncoder":
        tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        model = AutoModel.from_pretrained(name_or_path)
        return cls(model, tokenizer, name=str(name_or_path), pooling=pooling)

    def save(self, path: str) -> None:
        self.model.save_pretrained(path)
        self.tokenizer.save_pretrained(path)

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def _max_length(self, limit: int | None) -> int:
        cap = int(self.model.config.max_position_embeddings)
        return cap if limit is None else min(limit, cap)

    def _log_truncation(self, texts: list[str], max_length: int) -> None:
        lengths = [
            len(ids) for ids in
            self.tokenizer(list(texts), truncation=False, padding=False)["input_ids"]
        ]
        over = sum(1 for n in lengths if n > max_length)
        if over:
            logger.warning("truncated %d of %d texts to %d tokens",
                           over, len(texts), max_length)

    def encode(self, texts, limit: int | None = REVIEW_TOKEN_LIMIT,
               train: bool = False, log_truncation: bool = False) -> torch.Tensor:
        """Encode texts to a [n, hidden] tensor, preserving order."""
        texts = list(texts)
        max_length = self._max_length(limit)
        if log_truncation:
            self._log_truncation(texts, max_length)
        encoded = self.tokenizer(texts, padding=True, truncation=True,
                                 max_length=max_length, return_tensors="pt")
        self.model.train(train)
        if train:
            out = self.model(**encoded)
            return self._pool(out.last_hidden_state, encoded["attention_mask"])
        with torch.no_grad():
            out = self.model(**encoded)
            return self._pool(out.last_hidden_state, encoded["attention_mask"])

    def _pool(self, hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if self.pooling == "CLS":
            return hidden[:, 0, :]
        weights = mask.unsqueeze(-1).to(hidden.dtype)
        return (hidden * weights).sum(dim=1) / weights.sum(dim=1)
