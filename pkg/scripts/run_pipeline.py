#!/usr/bin/env python3
"""Run the whole pipeline end to end on generated toy data.

Generates a corpus, checks it, exports training tuples, trains item vectors,
searches with every backend, and evaluates each run. Everything lands under
--workdir so the artifacts can be inspected afterwards.
"""

import argparse
import json
import sys
from pathlib import Path

from make_toy_data import build  # noqa: E402 (sibling script)

from rir import EmbeddingStore, cli, save_corpus, save_embeddings


def step(title: str, argv: list) -> None:
    print(f"\n== {title}\n$ rir {' '.join(str(a) for a in argv)}")
    status = cli.main([str(a) for a in argv])
    if status != 0:
        sys.exit(f"step failed with status {status}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_out")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    corpus, review_vecs, query_vecs, queries, qrels = build(
        n_items=12, n_reviews=8, dim=16, seed=args.seed)
    save_corpus(corpus, work / "corpus.jsonl")
    with open(work / "queries.jsonl", "w", encoding="utf-8") as handle:
        for record in queries:
            handle.write(json.dumps(record) + "\n")
    with open(work / "qrels.tsv", "w", encoding="utf-8") as handle:
        for qid, item_id in qrels:
            handle.write(f"{qid}\t{item_id}\n")
    dim = next(iter(review_vecs.values())).shape[0]
    save_embeddings(EmbeddingStore(dim=dim, vectors=review_vecs),
                    work / "reviews.rire")
    save_embeddings(EmbeddingStore(dim=dim, vectors=query_vecs, kind="query"),
                    work / "queries.rire")

    corpus_f, queries_f, qrels_f = (work / "corpus.jsonl", work / "queries.jsonl",
                                    work / "qrels.tsv")
    reviews_rire, queries_rire = work / "reviews.rire", work / "queries.rire"

    step("validate input files",
         ["validate", "--corpus", corpus_f, "--queries", queries_f,
          "--qrels", qrels_f])
    step("sparse index statistics", ["index", "--corpus", corpus_f])
    step("embedding coverage",
         ["index", "--corpus", corpus_f, "--embeddings", reviews_rire])

    step("export contrastive tuples",
         ["pairs", "--corpus", corpus_f, "--embeddings", reviews_rire,
          "--positive", "LS_SI", "--negative", "IB_HN", "--per-item", "2",
          "--batch-size", "8", "--seed", args.seed,
          "--out", work / "tuples.jsonl"])

    step("train item vectors",
         ["cefr", "--corpus", corpus_f, "--embeddings", reviews_rire,
          "--lr", "1e-3", "--epochs", "15", "--batch-size", "8",
          "--seed", args.seed, "--out", work / "items.rire",
          "--trace", work / "trace.jsonl"])

    runs = {}
    for name, extra in [
        ("bm25_kall", ["--scorer", "bm25", "--fusion", "lf", "--k", "all"]),
        ("bm25_k1_ppmd", ["--scorer", "bm25", "--fusion", "lf", "--k", "1",
                          "--ppmd"]),
        ("tfidf_kall", ["--scorer", "tfidf", "--fusion", "lf", "--k", "all"]),
        ("dense_lf_k3", ["--embeddings", reviews_rire,
                         "--query-embeddings", queries_rire,
                         "--fusion", "lf", "--k", "3"]),
        ("dense_ef_avg", ["--embeddings", reviews_rire,
                          "--query-embeddings", queries_rire, "--fusion", "ef"]),
        ("dense_ef_trained", ["--item-table", work / "items.rire",
                              "--query-embeddings", queries_rire,
                              "--fusion", "ef"]),
    ]:
        run_path = work / f"run_{name}.jsonl"
        runs[name] = run_path
        step(f"search: {name}",
             ["search", "--corpus", corpus_f, "--queries", queries_f,
              "--out", run_path] + extra)

    for name, run_path in runs.items():
        step(f"evaluate: {name}",
             ["eval", "--run", run_path, "--qrels", qrels_f, "--label", name])

    sweep_config = {
        "corpus": str(corpus_f), "queries": str(queries_f),
        "qrels": str(qrels_f), "outdir": str(work / "sweep"),
        "retrieval": {"sparse": "bm25"}, "k_grid": [1, 3, "all"], "seeds": [0],
    }
    config_path = work / "sweep.json"
    config_path.write_text(json.dumps(sweep_config, indent=2))
    step("sweep the K grid", ["sweep", "--config", config_path])

    print(f"\nartifacts under {work}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
