import json

import numpy as np
import pytest
import torch
import transformers
from transformers import BertConfig, BertModel, BertTokenizer

from rir import EmbeddingStore, Item, Review, SamplingConfig, build_corpus
from rir import build_tuple_set, export_tuples, save_corpus

transformers.utils.logging.set_verbosity_error()
transformers.utils.logging.disable_progress_bar()

FILLER = ("the", "and", "good", "bad", "food", "place", "nice", "slow")
HIDDEN = 32


def _vocab() -> list[str]:
    return (["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
            + [f"w{i}" for i in range(50)] + list(FILLER))


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    """A randomly initialized one-layer encoder saved as a local checkpoint."""
    path = tmp_path_factory.mktemp("tinybert")
    vocab = _vocab()
    (path / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizer(str(path / "vocab.txt"))
    config = BertConfig(vocab_size=len(vocab), hidden_size=HIDDEN,
                        num_hidden_layers=1, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=300)
    torch.manual_seed(42)
    model = BertModel(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


def _toy_corpus(n_items: int, rng: np.random.Generator):
    items = []
    for i in range(n_items):
        signature = f"w{i}"
        reviews = []
        for j in range(2):
            words = [signature] * int(rng.integers(2, 4))
            words += list(rng.choice(FILLER, size=rng.integers(3, 6)))
            rng.shuffle(words)
            reviews.append(Review(review_id=f"i{i:02d}r{j}", item_id=f"i{i:02d}",
                                  text=" ".join(words), rating=int(rng.integers(1, 6))))
        items.append(Item(item_id=f"i{i:02d}", name=f"place {i}",
                          categories=(), reviews=tuple(reviews)))
    return build_corpus(items)


@pytest.fixture(scope="session")
def toy_data(tmp_path_factory):
    """Corpus + queries files and a 500-tuple export in 10 batches of 48."""
    path = tmp_path_factory.mktemp("toy_data")
    rng = np.random.default_rng(0)
    corpus = _toy_corpus(50, rng)
    save_corpus(corpus, path / "corpus.jsonl")
    with open(path / "queries.jsonl", "w", encoding="utf-8") as handle:
        for i in range(10):
            handle.write(json.dumps(
                {"query_id": f"q{i}", "text": f"good w{i} place"}) + "\n")
    config = SamplingConfig(positive_strategy="SI", per_item_count=10,
                            batch_size=48, seed=0)
    tuples, batches = build_tuple_set(corpus, None, config)
    assert len(tuples) == 500 and len(batches) == 10
    export_tuples(batches, path / "tuples.jsonl")
    return {"corpus": path / "corpus.jsonl", "queries": path / "queries.jsonl",
            "tuples": path / "tuples.jsonl"}


@pytest.fixture(scope="session")
def small_export(tmp_path_factory):
    """A 2-batch export with batch size 8, for fast training tests."""
    path = tmp_path_factory.mktemp("small") / "tuples.jsonl"
    rng = np.random.default_rng(1)
    corpus = _toy_corpus(8, rng)
    config = SamplingConfig(positive_strategy="SI", per_item_count=2,
                            batch_size=8, seed=0)
    _, batches = build_tuple_set(corpus, None, config)
    export_tuples(batches, path)
    return path


@pytest.fixture(scope="session")
def hard_negative_export(tmp_path_factory):
    """An export whose tuples carry one mined hard negative each."""
    path = tmp_path_factory.mktemp("hard") / "tuples.jsonl"
    rng = np.random.default_rng(2)
    corpus = _toy_corpus(6, rng)
    store = EmbeddingStore(dim=4)
    for review in corpus.reviews():
        store.vectors[review.review_id] = rng.normal(size=4).astype(np.float32)
    config = SamplingConfig(positive_strategy="SI", negative_strategy="IB_HN",
                            per_item_count=2, batch_size=6, seed=0)
    _, batches = build_tuple_set(corpus, store, config)
    export_tuples(batches, path)
    return path
