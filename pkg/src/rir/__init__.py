"""Reviewed-item retrieval: rank items through the reviews written about them.

Sparse (BM25, TF-IDF) and dense query-review scoring feed either Late Fusion
(top-K score averaging per item) or Early Fusion (one vector per item).
Contrastive training tuples exploit the item-review structure, and a small
optimizer learns item vectors against frozen review embeddings. Embeddings
interchange with external encoders through a fixed binary format.
"""

from .cefr import TrainConfig, batch_loss_and_grads, cefr_train, ef_inference
from .contrastive import LossInput, batch_loss, npair_grad_anchor, npair_loss
from .corpus import (
    Corpus,
    CorpusError,
    Item,
    Query,
    Review,
    build_corpus,
    load_corpus,
    load_queries,
    ppmd_transform,
    save_corpus,
)
from .dense import (
    EmbeddingIOError,
    EmbeddingStore,
    ItemEmbeddingTable,
    load_embeddings,
    save_embeddings,
    similarity,
)
from .evaluation import (
    MetricReport,
    RunMetrics,
    aggregate,
    average_precision,
    evaluate_run,
    load_qrels,
    r_precision,
)
from .fusion import ALL, ItemRanking, average_ef, late_fuse, rank_items_ef, rank_items_lf
from .sampling import (
    ContrastiveTuple,
    SamplingConfig,
    SamplingError,
    TupleBatch,
    build_tuple_set,
    export_tuples,
)
from .sparse import SparseIndex, bm25_score, build_index, score_all, tfidf_score, tokenize

__all__ = [
    "ALL",
    "ContrastiveTuple",
    "Corpus",
    "CorpusError",
    "EmbeddingIOError",
    "EmbeddingStore",
    "Item",
    "ItemEmbeddingTable",
    "ItemRanking",
    "LossInput",
    "MetricReport",
    "Query",
    "Review",
    "RunMetrics",
    "SamplingConfig",
    "SamplingError",
    "SparseIndex",
    "TrainConfig",
    "TupleBatch",
    "aggregate",
    "average_ef",
    "average_precision",
    "batch_loss",
    "batch_loss_and_grads",
    "bm25_score",
    "build_corpus",
    "build_index",
    "build_tuple_set",
    "cefr_train",
    "ef_inference",
    "evaluate_run",
    "export_tuples",
    "late_fuse",
    "load_corpus",
    "load_embeddings",
    "load_qrels",
    "load_queries",
    "npair_grad_anchor",
    "npair_loss",
    "ppmd_transform",
    "r_precision",
    "rank_items_ef",
    "rank_items_lf",
    "save_corpus",
    "save_embeddings",
    "score_all",
    "similarity",
    "tfidf_score",
    "tokenize",
]
