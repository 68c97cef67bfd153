"""Ranking metrics: R-Precision, Average Precision, and multi-seed confidence intervals.

Relevance judgments arrive as TSV; rankings come from run files. Queries with
no relevant items are excluded from the means and listed separately, since
R-Precision is undefined for them. Across-seed intervals use the Student t
quantile (two-sided 90%), the defensible choice at five seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from scipy import stats

from .fusion import ItemRanking


class EvalError(ValueError):
    pass


def load_qrels(path: str | Path) -> dict[str, set[str]]:
    """Parse relevance judgments from TSV into query_id -> relevant item ids.

    Accepted row shapes (tab-separated, # comments and blank lines skipped):
      query_id <tab> item_id                      relevant
      query_id <tab> item_id <tab> rel            relevant iff rel > 0
      query_id <tab> iter <tab> item_id <tab> rel trec_eval layout
    """
    qrels: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                query_id, item_id, rel = parts[0], parts[1], 1
            elif len(parts) in (3, 4):
                query_id = parts[0]
                item_id = parts[-2]
                try:
                    rel = int(parts[-1])
                except ValueError as exc:
                    raise EvalError(
                        f"line {lineno}: relevance {parts[-1]!r} is not an integer"
                    ) from exc
            else:
                raise EvalError(f"line {lineno}: expected 2-4 columns, got {len(parts)}")
            if not query_id or not item_id:
                raise EvalError(f"line {lineno}: empty query or item id")
            qrels.setdefault(query_id, set())
            if rel > 0:
                qrels[query_id].add(item_id)
    if not qrels:
        raise EvalError(f"no judgments found in {path}")
    return qrels


def _check_ranking(ranking: Sequence[str], relevant: set[str]) -> None:
    if not relevant:
        raise EvalError("metric undefined: query has no relevant items")
    seen = set(ranking)
    if len(seen) != len(ranking):
        raise EvalError("ranking contains duplicate item ids")
    missing = relevant - seen
    if missing:
        raise EvalError(f"ranking is missing relevant items {sorted(missing)[:3]}")


def r_precision(ranking: Sequence[str], relevant: set[str]) -> float:
    """Fraction of the top-R ranked items that are relevant, R = |relevant|."""
    _check_ranking(ranking, relevant)
    r = len(relevant)
    return sum(1 for item in ranking[:r] if item in relevant) / r


def average_precision(ranking: Sequence[str], relevant: set[str]) -> float:
    """Mean over relevant items of precision at that item's rank."""
    _check_ranking(ranking, relevant)
    hits = 0
    total = 0.0
    for rank, item in enumerate(ranking, start=1):
        if item in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


@dataclass(frozen=True)
class RunMetrics:
    """Per-query metrics and their means for one run (one seed)."""

    per_query: dict[str, dict[str, float]]
    mean_ap: float
    mean_r_prec: float
    skipped: tuple[str, ...] = ()    # queries with zero relevant items

    @property
    def n_queries(self) -> int:
        return len(self.per_query)


def evaluate_run(rankings: Sequence[ItemRanking],
                 qrels: Mapping[str, set[str]]) -> RunMetrics:
    by_query = {}
    for ranking in rankings:
        if ranking.query_id in by_query:
            raise EvalError(f"run has two rankings for query {ranking.query_id!r}")
        by_query[ranking.query_id] = [item_id for item_id, _ in ranking.ranking]
    missing = sorted(set(qrels) - set(by_query))
    if missing:
        raise EvalError(f"run lacks rankings for judged queries {missing[:3]}")

    per_query: dict[str, dict[str, float]] = {}
    skipped: list[str] = []
    for query_id in sorted(qrels):
        relevant = qrels[query_id]
        if not relevant:
            skipped.append(query_id)
            continue
        items = by_query[query_id]
        per_query[query_id] = {
            "ap": average_precision(items, relevant),
            "r_prec": r_precision(items, relevant),
        }
    if not per_query:
        raise EvalError("no judged query has relevant items")
    n = len(per_query)
    return RunMetrics(
        per_query=per_query,
        mean_ap=sum(m["ap"] for m in per_query.values()) / n,
        mean_r_prec=sum(m["r_prec"] for m in per_query.values()) / n,
        skipped=tuple(skipped),
    )


@dataclass(frozen=True)
class MetricReport:
    """Across-seed aggregate: mean plus two-sided 90% half-width per metric."""

    n_seeds: int
    mean_ap: float
    mean_r_prec: float
    ap_half_width: float | None      # None when a single run makes the CI inapplicable
    r_prec_half_width: float | None
    run_means: tuple[dict[str, float], ...] = ()


def _half_width(values: Sequence[float]) -> float | None:
    n = len(values)
    if n < 2:
        return None
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return float(stats.t.ppf(0.95, n - 1)) * math.sqrt(var / n)


def aggregate(runs: Sequence[RunMetrics]) -> MetricReport:
    """Combine per-seed runs into mean ± t_{0.95,n-1}·s/√n per metric."""
    if not runs:
        raise EvalError("nothing to aggregate")
    query_sets = [frozenset(run.per_query) for run in runs]
    if len(set(query_sets)) != 1:
        raise EvalError("runs cover different query sets")
    aps = [run.mean_ap for run in runs]
    rps = [run.mean_r_prec for run in runs]
    return MetricReport(
        n_seeds=len(runs),
        mean_ap=sum(aps) / len(aps),
        mean_r_prec=sum(rps) / len(rps),
        ap_half_width=_half_width(aps),
        r_prec_half_width=_half_width(rps),
        run_means=tuple({"ap": a, "r_prec": r} for a, r in zip(aps, rps)),
    )


def format_report(report: MetricReport, label: str = "") -> str:
    """Human-readable table, one row per metric."""
    def fmt(mean: float, hw: float | None) -> str:
        return f"{mean:.4f} ± {hw:.4f}" if hw is not None else f"{mean:.4f} (1 run)"

    header = f"=== {label} ===" if label else "=== metrics ==="
    lines = [
        header,
        f"seeds:  {report.n_seeds}",
        f"R-Prec: {fmt(report.mean_r_prec, report.r_prec_half_width)}",
        f"MAP:    {fmt(report.mean_ap, report.ap_half_width)}",
    ]
    return "\n".join(lines)


def report_record(report: MetricReport, label: str = "") -> dict:
    """JSON-serializable form of a report, one record per aggregate."""
    return {
        "label": label,
        "n_seeds": report.n_seeds,
        "mean_r_prec": report.mean_r_prec,
        "r_prec_half_width": report.r_prec_half_width,
        "mean_ap": report.mean_ap,
        "ap_half_width": report.ap_half_width,
        "run_means": list(report.run_means),
    }
