"""Command-line pipeline: validate, index, pairs, cefr, search, eval, sweep.

Every subcommand takes its settings from flags, from a JSON config file via
--config, or both; explicit flags win over config values. `sweep` runs the
K in {1, 10, all} grid across seeds and emits one aggregate report per cell
plus a config snapshot sufficient to reproduce the outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import cefr as cefr_mod
from . import corpus as corpus_mod
from . import dense, evaluation, fusion, sampling, sparse

K_GRID = (1, 10, fusion.ALL)


class CliError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as handle:
        cfg = json.load(handle)
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    return cfg


def _merge(args: argparse.Namespace, config: dict) -> argparse.Namespace:
    """Fill unset args from config; flags given on the command line win."""
    for key, value in config.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise CliError(f"missing required setting --{name.replace('_', '-')}")


def _parse_k(raw) -> fusion.KValue:
    if isinstance(raw, str) and raw.lower() == fusion.ALL:
        return fusion.ALL
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise CliError(f"--k must be a positive integer or 'all', got {raw!r}")


def _seed_path(template: str, seed: int) -> str:
    """Resolve a '{seed}' placeholder; paths without one are shared by seeds."""
    return template.replace("{seed}", str(seed))


# --- subcommands -----------------------------------------------------------


def _cmd_validate(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    print(f"items:   {corpus.n_items}")
    print(f"reviews: {corpus.n_reviews}")
    print(f"reviews/item: {corpus.n_reviews / corpus.n_items:.2f}")
    if args.queries:
        queries = corpus_mod.load_queries(args.queries)
        print(f"queries: {len(queries)}")
    if args.qrels:
        qrels = evaluation.load_qrels(args.qrels)
        judged = sum(1 for rel in qrels.values() if rel)
        print(f"judged queries: {judged} ({len(qrels) - judged} with no relevant items)")
    return 0


def _cmd_index(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    if args.embeddings:
        store = dense.load_embeddings(args.embeddings)
        missing = [r.review_id for r in corpus.reviews() if r.review_id not in store.vectors]
        print(f"embeddings: {len(store)} rows, dim {store.dim}")
        if missing:
            print(f"error: {len(missing)} corpus reviews lack embeddings "
                  f"(first: {missing[:3]})", file=sys.stderr)
            return 1
        print("coverage: all corpus reviews embedded")
        return 0
    index = sparse.build_index(corpus)
    print(f"reviews: {index.n_reviews}")
    print(f"vocabulary: {len(index.vocab)} terms")
    print(f"avg review length: {index.avg_len:.2f} tokens")
    return 0


def _sampling_config(args: argparse.Namespace) -> sampling.SamplingConfig:
    kwargs = {}
    pairs = [("positive", "positive_strategy"), ("anchor_mode", "anchor_mode"),
             ("negative", "negative_strategy"), ("per_item", "per_item_count"),
             ("batch_size", "batch_size"), ("seed", "seed"),
             ("span_min", "span_min"), ("span_max", "span_max")]
    for flag, field in pairs:
        value = getattr(args, flag)
        if value is not None:
            kwargs[field] = value
    if "positive_strategy" not in kwargs:
        raise CliError("missing required setting --positive")
    return sampling.SamplingConfig(**kwargs)


def _cmd_pairs(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    corpus = corpus_mod.load_corpus(args.corpus)
    config = _sampling_config(args)
    store = dense.load_embeddings(args.embeddings) if args.embeddings else None
    tuples, batches = sampling.build_tuple_set(corpus, store, config)
    sampling.export_tuples(batches, args.out)
    fallbacks = sum(1 for t in tuples if t.provenance.fallback)
    print(f"tuples: {len(tuples)} ({fallbacks} strategy fallbacks)")
    print(f"batches of {config.batch_size}: {len(batches)} -> {args.out}")
    return 0


def _cmd_cefr(args: argparse.Namespace) -> int:
    _require(args, "corpus", "embeddings", "out")
    corpus = corpus_mod.load_corpus(args.corpus)
    store = dense.load_embeddings(args.embeddings)
    config = cefr_mod.TrainConfig(
        learning_rate=args.lr if args.lr is not None else 1e-5,
        batch_size=args.batch_size if args.batch_size is not None else 48,
        epochs=args.epochs if args.epochs is not None else 100,
        seed=args.seed if args.seed is not None else 0,
        per_item_count=args.per_item if args.per_item is not None else 1,
        patience=args.patience if args.patience is not None else 5,
        min_delta=args.min_delta if args.min_delta is not None else 1e-4,
    )
    table, trace = cefr_mod.cefr_train(corpus, store, config)
    dense.save_embeddings(table.as_store(), args.out)
    if args.trace:
        cefr_mod.write_trace(trace, args.trace)
    last = trace[-1]["mean_loss"] if trace else float("nan")
    print(f"epochs run: {len(trace)}, final mean loss {last:.6f}")
    print(f"item table: {len(table.vectors)} vectors -> {args.out}")
    return 0


def _search_rankings(corpus, queries, args, k) -> list[fusion.ItemRanking]:
    if args.scorer:
        index = sparse.build_index(corpus)
        return [
            fusion.rank_items_lf(
                sparse.score_all(index, q, scorer=args.scorer), k, query_id=q.query_id
            )
            for q in queries
        ]
    q_store = dense.load_embeddings(args.query_embeddings, kind="query")

    def q_vec(q):
        if q.query_id not in q_store.vectors:
            raise CliError(f"no embedding for query {q.query_id!r}")
        return q_store.vectors[q.query_id]

    if args.fusion == "ef":
        if args.item_table:
            table = dense.load_item_table(args.item_table)
        else:
            table = fusion.average_ef(dense.load_embeddings(args.embeddings), corpus)
        return [fusion.rank_items_ef(table, q_vec(q), query_id=q.query_id)
                for q in queries]
    store = dense.load_embeddings(args.embeddings)
    return [
        fusion.rank_items_lf(
            dense.score_reviews(store, q_vec(q), corpus), k, query_id=q.query_id
        )
        for q in queries
    ]


def _check_search_args(args: argparse.Namespace) -> None:
    _require(args, "corpus", "queries", "out")
    if args.fusion is None:
        args.fusion = "lf"
    if args.fusion not in ("lf", "ef"):
        raise CliError(f"--fusion must be lf or ef, got {args.fusion!r}")
    sparse_backend = args.scorer is not None
    dense_backend = any(x is not None
                        for x in (args.embeddings, args.query_embeddings, args.item_table))
    if sparse_backend == dense_backend:
        raise CliError("choose exactly one retrieval backend: "
                       "--scorer, or embedding files")
    if sparse_backend and args.fusion == "ef":
        raise CliError("early fusion needs dense embeddings, not a sparse scorer")
    if dense_backend:
        _require(args, "query_embeddings")
        if args.fusion == "lf":
            _require(args, "embeddings")
        elif args.embeddings is None and args.item_table is None:
            raise CliError("early fusion needs --item-table or --embeddings")
    if args.ppmd and not sparse_backend:
        raise CliError("--ppmd rewrites review text, which only sparse scoring reads")


def _cmd_search(args: argparse.Namespace) -> int:
    _check_search_args(args)
    k = _parse_k(args.k) if args.fusion == "lf" else None
    corpus = corpus_mod.load_corpus(args.corpus)
    if args.ppmd:
        corpus = corpus_mod.ppmd_transform(corpus)
    queries = corpus_mod.load_queries(args.queries)
    rankings = _search_rankings(corpus, queries, args, k)
    fusion.write_run(rankings, args.out)
    snapshot = {
        "command": "search", "corpus": args.corpus, "queries": args.queries,
        "scorer": args.scorer, "embeddings": args.embeddings,
        "query_embeddings": args.query_embeddings, "item_table": args.item_table,
        "fusion": args.fusion, "k": k, "ppmd": bool(args.ppmd), "out": args.out,
    }
    with open(f"{args.out}.config.json", "w", encoding="utf-8") as handle:
        json.dump(snapshot, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"ranked {len(queries)} queries over {corpus.n_items} items -> {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    _require(args, "run", "qrels")
    qrels = evaluation.load_qrels(args.qrels)
    runs = [evaluation.evaluate_run(fusion.read_run(path), qrels)
            for path in args.run]
    report = evaluation.aggregate(runs)
    print(evaluation.format_report(report, label=args.label or ""))
    for run_metrics in runs:
        if run_metrics.skipped:
            print(f"skipped (no relevant items): {', '.join(run_metrics.skipped)}")
            break
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(
                evaluation.report_record(report, label=args.label or "")) + "\n")
    return 0


def _sweep_cell(config: dict, k, seed: int, outdir: Path) -> tuple[str, Path]:
    """One (K, seed) grid cell run in isolation; returns its label and run path."""
    label = f"k={k}" if k is not None else "ef"
    run_path = outdir / f"run_{label.replace('=', '')}_seed{seed}.jsonl"
    argv = ["search", "--corpus", config["corpus"], "--queries", config["queries"],
            "--out", str(run_path)]
    retrieval = config["retrieval"]
    if "sparse" in retrieval:
        argv += ["--scorer", retrieval["sparse"]]
    else:
        files = retrieval["dense"]
        argv += ["--query-embeddings", _seed_path(files["queries"], seed)]
        if "reviews" in files:
            argv += ["--embeddings", _seed_path(files["reviews"], seed)]
        if "table" in files:
            argv += ["--item-table", _seed_path(files["table"], seed)]
    if k is None:
        argv += ["--fusion", "ef"]
    else:
        argv += ["--fusion", "lf", "--k", str(k)]
    if config.get("ppmd"):
        argv += ["--ppmd"]
    status = main(argv)
    if status != 0:
        raise CliError(f"grid cell {label} seed {seed} failed")
    return label, run_path


def _cmd_sweep(args: argparse.Namespace) -> int:
    if not args.config:
        raise CliError("sweep requires --config")
    config = _load_config(args.config)
    for key in ("corpus", "queries", "qrels", "retrieval", "outdir"):
        if key not in config:
            raise CliError(f"sweep config is missing {key!r}")
    seeds = config.get("seeds", [0])
    outdir = Path(config["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)

    fusion_mode = config.get("fusion", {}).get("mode", "lf")
    if fusion_mode == "ef":
        grid = [None]
    else:
        grid = [_parse_k(k) for k in config.get("k_grid", K_GRID)]

    cells = [(k, seed) for k in grid for seed in seeds]
    with ThreadPoolExecutor(max_workers=min(8, len(cells))) as pool:
        futures = [pool.submit(_sweep_cell, config, k, seed, outdir)
                   for k, seed in cells]
        results = [f.result() for f in futures]

    snapshot = dict(config)
    snapshot["seeds"] = list(seeds)
    snapshot["k_grid"] = [str(k) for k in grid]
    with open(outdir / "config_snapshot.json", "w", encoding="utf-8") as handle:
        json.dump(snapshot, handle, indent=2, sort_keys=True)
        handle.write("\n")

    qrels = evaluation.load_qrels(config["qrels"])
    by_label: dict[str, list[Path]] = {}
    for label, run_path in results:
        by_label.setdefault(label, []).append(run_path)
    report_path = outdir / "report.jsonl"
    with open(report_path, "w", encoding="utf-8") as handle:
        for label in sorted(by_label):
            runs = [evaluation.evaluate_run(fusion.read_run(p), qrels)
                    for p in sorted(by_label[label])]
            report = evaluation.aggregate(runs)
            print(evaluation.format_report(report, label=label))
            handle.write(json.dumps(
                evaluation.report_record(report, label=label)) + "\n")
    print(f"report -> {report_path}")
    return 0


# --- argument surface ------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rir", description="reviewed-item retrieval pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check corpus/query/qrels files")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.set_defaults(func=_cmd_validate, needs=("corpus",))

    p = sub.add_parser("index", help="build the sparse index or check embeddings")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--embeddings", help="verify this embedding file covers the corpus")
    p.set_defaults(func=_cmd_index, needs=("corpus",))

    p = sub.add_parser("pairs", help="export contrastive training tuples")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--embeddings")
    p.add_argument("--out")
    p.add_argument("--positive", choices=sampling.POSITIVE_STRATEGIES)
    p.add_argument("--anchor-mode", choices=sampling.ANCHOR_MODES)
    p.add_argument("--negative", choices=sampling.NEGATIVE_STRATEGIES)
    p.add_argument("--per-item", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--span-min", type=int)
    p.add_argument("--span-max", type=int)
    p.set_defaults(func=_cmd_pairs, needs=())

    p = sub.add_parser("cefr", help="train item embeddings against frozen reviews")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--embeddings")
    p.add_argument("--out")
    p.add_argument("--trace")
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-item", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--min-delta", type=float)
    p.set_defaults(func=_cmd_cefr, needs=())

    p = sub.add_parser("search", help="rank items for each query")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--queries")
    p.add_argument("--scorer", choices=("bm25", "tfidf"))
    p.add_argument("--embeddings")
    p.add_argument("--query-embeddings")
    p.add_argument("--item-table")
    p.add_argument("--fusion", choices=("lf", "ef"))
    p.add_argument("--k", help="top-K reviews to average: integer or 'all'")
    p.add_argument("--ppmd", action="store_true", default=None,
                   help="prepend item name and categories to review text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_search, needs=())

    p = sub.add_parser("eval", help="score run files against qrels")
    _add_common(p)
    p.add_argument("--run", action="append")
    p.add_argument("--qrels")
    p.add_argument("--label")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval, needs=())

    p = sub.add_parser("sweep", help="run the K grid across seeds and aggregate")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep, needs=())
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        args = _merge(args, config)
        _require(args, *args.needs)
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
