"""NDCG@k, Recall@k, and Precision@k, per query and macro-averaged.

NDCG uses exponential gain (2^rel - 1) and 1/log2(rank+1) discount; for
binary judgments this coincides with linear gain.  Queries without a single
positive judgment are skipped from the macro average, and judged queries
missing from a run score zero across the board.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .retrieval import RankedList
from .store import Qrels

MACRO_ROW_ID = "__macro__"


@dataclass(frozen=True)
class QueryMetrics:
    ndcg: float
    recall: float
    precision: float


@dataclass(frozen=True)
class MetricsReport:
    per_query: dict[str, QueryMetrics]
    macro: QueryMetrics
    k: int
    n_evaluated: int
    n_skipped: int


def _require_positives(ranking: RankedList, qrels: Qrels) -> dict[str, int]:
    positives = qrels.positives(ranking.query_id)
    if not positives:
        raise ValueError(
            f"query {ranking.query_id!r} has no positively-relevant doc in qrels"
        )
    return positives


def _dcg(grades: list[int], k: int) -> float:
    return sum(
        (2**rel - 1) / math.log2(rank + 1)
        for rank, rel in enumerate(grades[:k], start=1)
    )


def ndcg_at_k(ranking: RankedList, qrels: Qrels, k: int = 10) -> float:
    """Normalized discounted cumulative gain over the top k entries."""
    positives = _require_positives(ranking, qrels)
    judged = qrels.entries[ranking.query_id]
    gains = [judged.get(doc_id, 0) for doc_id in ranking.doc_ids]
    ideal = sorted(positives.values(), reverse=True)
    return _dcg(gains, k) / _dcg(ideal, k)


def recall_at_k(ranking: RankedList, qrels: Qrels, k: int = 10) -> float:
    """Fraction of relevant docs present in the top k."""
    positives = _require_positives(ranking, qrels)
    hits = sum(1 for doc_id in ranking.doc_ids[:k] if doc_id in positives)
    return hits / len(positives)


def precision_at_k(ranking: RankedList, qrels: Qrels, k: int = 10) -> float:
    """Relevant docs in the top k divided by k (fixed denominator)."""
    positives = _require_positives(ranking, qrels)
    hits = sum(1 for doc_id in ranking.doc_ids[:k] if doc_id in positives)
    return hits / k


def evaluate(run: list[RankedList], qrels: Qrels, k: int = 10) -> MetricsReport:
    """Score a run against qrels and macro-average over evaluated queries.

    Evaluated queries are exactly the qrels queries with >= 1 positive
    judgment; those missing from the run count as all-miss (zeros).  Skipped
    queries (no positives, or run-only) are tallied in n_skipped.
    """
    by_query: dict[str, RankedList] = {}
    for ranked in run:
        if ranked.query_id in by_query:
            raise ValueError(f"duplicate query {ranked.query_id!r} in run")
        by_query[ranked.query_id] = ranked
    if not set(by_query) & set(qrels.entries):
        raise ValueError("no evaluable queries")
    evaluable = sorted(q for q in qrels.entries if qrels.positives(q))
    if not evaluable:
        raise ValueError("no evaluable queries")
    per_query: dict[str, QueryMetrics] = {}
    for qid in evaluable:
        ranking = by_query.get(qid)
        if ranking is None:
            per_query[qid] = QueryMetrics(0.0, 0.0, 0.0)
        else:
            per_query[qid] = QueryMetrics(
                ndcg=ndcg_at_k(ranking, qrels, k),
                recall=recall_at_k(ranking, qrels, k),
                precision=precision_at_k(ranking, qrels, k),
            )
    n = len(per_query)
    macro = QueryMetrics(
        ndcg=sum(m.ndcg for m in per_query.values()) / n,
        recall=sum(m.recall for m in per_query.values()) / n,
        precision=sum(m.precision for m in per_query.values()) / n,
    )
    n_skipped = (len(qrels.entries) - n) + sum(1 for q in by_query if q not in qrels.entries)
    return MetricsReport(
        per_query=per_query, macro=macro, k=k, n_evaluated=n, n_skipped=n_skipped
    )


def write_report_tsv(report: MetricsReport, path: str | Path) -> None:
    """Write per-query rows plus a __macro__ row."""
    lines = [
        f"{qid}\t{m.ndcg!r}\t{m.recall!r}\t{m.precision!r}"
        for qid, m in sorted(report.per_query.items())
    ]
    m = report.macro
    lines.append(f"{MACRO_ROW_ID}\t{m.ndcg!r}\t{m.recall!r}\t{m.precision!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_report(report: MetricsReport) -> str:
    """Human-readable summary of a report."""
    m = report.macro
    return (
        f"queries evaluated: {report.n_evaluated} (skipped: {report.n_skipped})\n"
        f"macro ndcg@{report.k}:      {m.ndcg:.4f}\n"
        f"macro recall@{report.k}:    {m.recall:.4f}\n"
        f"macro precision@{report.k}: {m.precision:.4f}"
    )
