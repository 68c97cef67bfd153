"""Command line: train an encoder on exported tuples, embed a corpus to RIRE."""

from __future__ import annotations

import argparse
import sys

import transformers

from .emit import embed_corpus
from .encoder import TextEncoder
from .training import BridgeConfig, train_encoder, write_trace


def _cmd_train(args: argparse.Namespace) -> int:
    if bool(args.corpus) != bool(args.queries):
        raise ValueError("--corpus and --queries must be given together")
    config = BridgeConfig(
        tuples=args.tuples, encoder=args.encoder, pooling=args.pooling,
        learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
        seed=args.seed, review_out=args.review_out, query_out=args.query_out,
        val_fraction=args.val_fraction,
    )
    encoder, trace = train_encoder(config)
    encoder.save(args.out)
    if args.trace:
        write_trace(trace, args.trace)
    if trace:
        last = trace[-1]
        print(f"epochs: {len(trace)}, final mean loss {last['mean_loss']:.6f}, "
              f"cross-check rel {last['cross_check_rel']:.2e}")
    else:
        print("epochs: 0, checkpoint equals the base encoder")
    print(f"checkpoint -> {args.out}")
    if args.corpus:
        stats = embed_corpus(encoder, args.corpus, args.queries,
                             config.review_out, config.query_out,
                             seed=config.seed)
        print(f"{stats['reviews']} review and {stats['queries']} query vectors, "
              f"dim {stats['dim']} -> {config.review_out}, {config.query_out}")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    encoder = TextEncoder.load(args.encoder, pooling=args.pooling)
    stats = embed_corpus(encoder, args.corpus, args.queries,
                         args.review_out, args.query_out,
                         seed=args.seed, batch_size=args.batch_size)
    print(f"{stats['reviews']} review and {stats['queries']} query vectors, "
          f"dim {stats['dim']} -> {args.review_out}, {args.query_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rir-bridge",
        description="encoder fine-tuning and embedding emission for "
                    "reviewed-item retrieval")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on a tuple export")
    p.add_argument("--tuples", required=True)
    p.add_argument("--encoder", required=True,
                   help="model name or checkpoint directory")
    p.add_argument("--pooling", choices=("CLS", "MEAN"), default="CLS")
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=48)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--trace")
    p.add_argument("--corpus", help="with --queries: embed to RIRE after training")
    p.add_argument("--queries")
    p.add_argument("--review-out", default="reviews.rire")
    p.add_argument("--query-out", default="queries.rire")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("embed", help="encode corpus reviews and queries to RIRE")
    p.add_argument("--encoder", required=True)
    p.add_argument("--pooling", choices=("CLS", "MEAN"), default="CLS")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--review-out", required=True)
    p.add_argument("--query-out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=_cmd_embed)
    return parser


def main(argv=None) -> int:
    transformers.utils.logging.disable_progress_bar()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
