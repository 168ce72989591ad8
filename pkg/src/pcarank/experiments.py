"""Experiment orchestration: variant comparison, retention sweeps,
cross-validation, success-rate summaries, and similarity-distribution
analysis.

Four retrieval variants are supported: the uncompressed baseline, projection
fit on query embeddings only, projection fit on the row-concatenation of
queries and documents (no deduplication), and a random coordinate-dropping
control.  Improvement percentages are computed on macro NDCG before any
display rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .metrics import MetricsReport, evaluate
from .pca import PcaModel, fit_pca, project, random_projection_model, resolve_retention
from .retrieval import RankedList, retrieve_projected, retrieve_topk
from .store import EmbeddingMatrix, Qrels

VARIANTS = (
    "baseline",
    "query_compression",
    "query_doc_compression",
    "random_compression",
)

# Retention grid used by the sweep when none is given: 0.1 steps plus an
# extreme 0.05 point.
DEFAULT_RATIO_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    variant: str
    retention_ratio: float = 0.9
    k: int = 10
    seed: int = 42
    cv_folds: int = 0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if not 0.0 < self.retention_ratio <= 1.0:
            raise ValueError(f"retention_ratio must be in (0, 1], got {self.retention_ratio}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.cv_folds != 0 and self.cv_folds < 2:
            raise ValueError(f"cv_folds must be 0 or >= 2, got {self.cv_folds}")


@dataclass(frozen=True)
class ComparisonRow:
    """One variant's macro metric against the baseline's.

    improvement_pct is None when the baseline metric is zero (undefined).
    """

    dataset: str
    variant: str
    metric_baseline: float
    metric_variant: float
    improvement_pct: float | None
    model: str = ""


@dataclass(frozen=True)
class ClassStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SimilarityStats:
    relevant: ClassStats
    nonrelevant: ClassStats


def _concat_fit_matrix(queries: EmbeddingMatrix, docs: EmbeddingMatrix) -> EmbeddingMatrix:
    # Plain row concatenation; ids are prefixed only to keep them unique.
    data = np.vstack([queries.data, docs.data])
    ids = tuple(f"q:{i}" for i in queries.ids) + tuple(f"d:{i}" for i in docs.ids)
    return EmbeddingMatrix(data=data, ids=ids)


def build_model(
    config: ExperimentConfig,
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    fit_queries: EmbeddingMatrix | None = None,
) -> PcaModel | None:
    """The projection model a variant uses, or None for the baseline.

    ``fit_queries`` overrides the queries used for fitting (cross-validation
    fits on training folds while still retrieving for all queries).
    """
    samples = fit_queries if fit_queries is not None else queries
    if config.variant == "baseline":
        return None
    if config.variant == "random_compression":
        return random_projection_model(queries.dim, config.retention_ratio, config.seed)
    if config.variant == "query_compression":
        retention = resolve_retention(config.retention_ratio, samples.dim, samples.n_items)
        return fit_pca(samples, retention, fitted_on="queries")
    fit_matrix = _concat_fit_matrix(samples, docs)
    retention = resolve_retention(
        config.retention_ratio, fit_matrix.dim, fit_matrix.n_items
    )
    return fit_pca(fit_matrix, retention, fitted_on="queries_and_documents")


def variant_rankings(
    config: ExperimentConfig,
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    threads: int = 1,
) -> list[RankedList]:
    """Ranked lists for one variant over the full query set."""
    model = build_model(config, queries, docs)
    if model is None:
        return retrieve_topk(queries, docs, k=config.k, threads=threads)
    return retrieve_projected(model, queries, docs, k=config.k, threads=threads)


def run_variant(
    config: ExperimentConfig,
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    qrels: Qrels,
    threads: int = 1,
) -> MetricsReport:
    """End-to-end: rank with the variant's model and score against qrels."""
    return evaluate(variant_rankings(config, queries, docs, threads=threads), qrels, config.k)


def compare(
    configs: list[ExperimentConfig],
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    qrels: Qrels,
    dataset: str = "",
    model_name: str = "",
    threads: int = 1,
) -> list[ComparisonRow]:
    """Macro-NDCG improvement of each non-baseline config over the baseline."""
    if not any(c.variant == "baseline" for c in configs):
        raise ValueError("compare requires a baseline config")
    reports = {
        c.variant: run_variant(c, queries, docs, qrels, threads=threads) for c in configs
    }
    base = reports["baseline"].macro.ndcg
    rows = []
    for config in configs:
        if config.variant == "baseline":
            continue
        value = reports[config.variant].macro.ndcg
        pct = 100.0 * (value - base) / base if base > 0 else None
        rows.append(
            ComparisonRow(
                dataset=dataset,
                variant=config.variant,
                metric_baseline=base,
                metric_variant=value,
                improvement_pct=pct,
                model=model_name,
            )
        )
    return rows


def retention_sweep(
    ratios: list[float] | tuple[float, ...],
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    qrels: Qrels,
    variant: str = "query_compression",
    k: int = 10,
    seed: int = 42,
    threads: int = 1,
) -> list[tuple[float, MetricsReport]]:
    """One report per retention ratio for a single variant."""
    results = []
    for ratio in ratios:
        config = ExperimentConfig(variant=variant, retention_ratio=ratio, k=k, seed=seed)
        results.append((ratio, run_variant(config, queries, docs, qrels, threads=threads)))
    return results


def cross_validate(
    folds: int,
    seed: int,
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    qrels: Qrels,
    config: ExperimentConfig,
    threads: int = 1,
) -> MetricsReport:
    """K-fold evaluation: fit on the other folds' queries, score the held-out fold.

    Queries are shuffled by a PRNG seeded with ``seed`` and split into folds
    whose sizes differ by at most one.  Documents are never folded; the
    query+document variant fits on training queries plus the full corpus.
    Per-query metrics are pooled across folds and macro-averaged once.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if queries.n_items < folds:
        raise ValueError(f"{queries.n_items} queries cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(queries.n_items)
    splits = np.array_split(perm, folds)
    pooled: list[RankedList] = []
    for held_out in splits:
        train_idx = np.setdiff1d(perm, held_out, assume_unique=True)
        if train_idx.size < 2:
            raise ValueError(f"training split of {train_idx.size} samples is too small")
        train = EmbeddingMatrix(
            data=queries.data[train_idx],
            ids=tuple(queries.ids[i] for i in train_idx),
        )
        test = EmbeddingMatrix(
            data=queries.data[held_out],
            ids=tuple(queries.ids[i] for i in held_out),
        )
        model = build_model(config, queries, docs, fit_queries=train)
        if model is None:
            pooled.extend(retrieve_topk(test, docs, k=config.k, threads=threads))
        else:
            pooled.extend(retrieve_projected(model, test, docs, k=config.k, threads=threads))
    return evaluate(pooled, qrels, config.k)


def success_summary(
    rows: list[ComparisonRow], group_by: str = "dataset"
) -> list[tuple[str, int, int]]:
    """Wins (improvement > 0) and totals per dataset or per model."""
    if group_by not in ("dataset", "model"):
        raise ValueError(f"group_by must be 'dataset' or 'model', got {group_by!r}")
    groups: dict[str, list[ComparisonRow]] = {}
    for row in rows:
        key = row.dataset if group_by == "dataset" else row.model
        groups.setdefault(key, []).append(row)
    summary = []
    for key in sorted(groups):
        wins = sum(
            1
            for row in groups[key]
            if row.improvement_pct is not None and row.improvement_pct > 0
        )
        summary.append((key, wins, len(groups[key])))
    return summary


def similarity_distributions(
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    qrels: Qrels,
    model: PcaModel | None = None,
    k: int = 10,
    threads: int = 1,
) -> SimilarityStats:
    """Cosine-score statistics for relevant versus hard-negative pairs.

    Relevant pairs are every judged (query, doc) with relevance > 0; hard
    negatives are non-relevant docs appearing in the query's uncompressed
    top-k.  Scores are measured in raw space when ``model`` is None, else in
    the projected space.  Std is the population standard deviation.
    """
    query_index = {qid: i for i, qid in enumerate(queries.ids)}
    doc_index = {did: i for i, did in enumerate(docs.ids)}
    evaluable = [
        qid for qid in qrels.entries if qrels.positives(qid) and qid in query_index
    ]
    relevant_pairs = [
        (qid, did)
        for qid in evaluable
        for did in sorted(qrels.positives(qid))
        if did in doc_index
    ]
    if not relevant_pairs:
        raise ValueError("no relevant (query, doc) pairs to analyze")
    baseline_subset = EmbeddingMatrix(
        data=queries.data[[query_index[q] for q in evaluable]],
        ids=tuple(evaluable),
    )
    negative_pairs = [
        (ranked.query_id, did)
        for ranked in retrieve_topk(baseline_subset, docs, k=k, threads=threads)
        for did in ranked.doc_ids
        if qrels.relevance(ranked.query_id, did) == 0
    ]

    if model is not None:
        q_space, d_space = project(model, queries), project(model, docs)
    else:
        q_space, d_space = queries, docs
    qn, _ = _unit_rows(q_space.data)
    dn, _ = _unit_rows(d_space.data)

    def stats_for(pairs: list[tuple[str, str]]) -> ClassStats:
        if not pairs:
            return ClassStats(mean=0.0, std=0.0, count=0)
        scores = np.asarray(
            [float(qn[query_index[q]] @ dn[doc_index[d]]) for q, d in pairs]
        )
        return ClassStats(
            mean=float(scores.mean()), std=float(scores.std()), count=len(pairs)
        )

    return SimilarityStats(
        relevant=stats_for(relevant_pairs), nonrelevant=stats_for(negative_pairs)
    )


def _unit_rows(data: np.ndarray) -> tuple[np.ndarray, int]:
    x = data.astype(np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    zeros = int(np.sum(norms == 0.0))
    return x / np.where(norms == 0.0, 1.0, norms), zeros


def parse_manifest(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` experiment manifest; '#' starts a comment."""
    path = Path(path)
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}: line {lineno} is not 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def write_comparison_tsv(rows: list[ComparisonRow], path: str | Path) -> None:
    lines = ["dataset\tmodel\tvariant\tmetric_baseline\tmetric_variant\timprovement_pct"]
    for row in rows:
        pct = "" if row.improvement_pct is None else repr(row.improvement_pct)
        lines.append(
            f"{row.dataset}\t{row.model}\t{row.variant}\t"
            f"{row.metric_baseline!r}\t{row.metric_variant!r}\t{pct}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_tsv(
    results: list[tuple[float, MetricsReport]], path: str | Path
) -> None:
    lines = ["ratio\tndcg\trecall\tprecision"]
    for ratio, report in results:
        m = report.macro
        lines.append(f"{float(ratio)!r}\t{m.ndcg!r}\t{m.recall!r}\t{m.precision!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
