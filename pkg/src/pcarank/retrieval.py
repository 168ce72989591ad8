"""Exact top-k cosine retrieval over an embedding corpus.

Search is brute force by design: score every (query, doc) pair in float64,
keep the k best with a deterministic tie-break (ascending doc id).  Rankings
are identical regardless of thread count or document insertion order.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .pca import PcaModel, project
from .store import EmbeddingMatrix

_SCORE_SLACK = 1e-9


class ZeroNormWarning(UserWarning):
    """A zero-norm vector was scored; its similarity is defined as 0."""


@dataclass(frozen=True)
class RankedList:
    """Documents for one query, ordered by descending score.

    Ties are ordered by ascending doc id; scores lie in [-1, 1] up to
    float slack.
    """

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        prev: tuple[str, float] | None = None
        for doc_id, score in self.entries:
            if doc_id in seen:
                raise ValueError(f"duplicate doc id {doc_id!r} for query {self.query_id!r}")
            seen.add(doc_id)
            if abs(score) > 1.0 + _SCORE_SLACK:
                raise ValueError(f"score {score} outside [-1, 1] for doc {doc_id!r}")
            if prev is not None:
                if score > prev[1]:
                    raise ValueError(f"scores not non-increasing at doc {doc_id!r}")
                if score == prev[1] and doc_id < prev[0]:
                    raise ValueError(f"tie not in ascending doc-id order at {doc_id!r}")
            prev = (doc_id, score)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.entries)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two equal-length vectors, in [-1, 1].

    A zero-norm operand yields 0.0 and a ZeroNormWarning rather than NaN.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise ValueError(f"vector shapes differ: {va.shape} vs {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        warnings.warn("zero-norm vector scored as 0", ZeroNormWarning, stacklevel=2)
        return 0.0
    if np.array_equal(va, vb):
        return 1.0  # identical vectors score exactly 1, no rounding residue
    return float(va @ vb / (na * nb))


def zero_norm_count(matrix: EmbeddingMatrix) -> int:
    """How many rows have zero norm (score 0 against everything)."""
    return int(np.sum(~np.any(matrix.data != 0.0, axis=1)))


def _normalize_rows(data: np.ndarray) -> tuple[np.ndarray, int]:
    x = data.astype(np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    zeros = int(np.sum(norms == 0.0))
    safe = np.where(norms == 0.0, 1.0, norms)
    return x / safe, zeros


def _topk_indices(scores: np.ndarray, tie_rank: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best scores; exact ties resolved by tie_rank."""
    m = scores.shape[0]
    if k < m:
        candidates = np.argpartition(-scores, k - 1)[:k]
        threshold = scores[candidates].min()
        above = np.flatnonzero(scores > threshold)
        tied = np.flatnonzero(scores == threshold)
        need = k - above.size
        tied = tied[np.argsort(tie_rank[tied], kind="stable")][:need]
        chosen = np.concatenate([above, tied])
    else:
        chosen = np.arange(m)
    order = np.lexsort((tie_rank[chosen], -scores[chosen]))
    return chosen[order]


def retrieve_topk(
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    k: int = 10,
    threads: int = 1,
) -> list[RankedList]:
    """Rank the min(k, n_docs) highest-cosine docs for every query."""
    if queries.dim != docs.dim:
        raise ValueError(f"query dim {queries.dim} does not match doc dim {docs.dim}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    qn, q_zeros = _normalize_rows(queries.data)
    dn, d_zeros = _normalize_rows(docs.data)
    if q_zeros or d_zeros:
        warnings.warn(
            f"{q_zeros} zero-norm queries and {d_zeros} zero-norm docs scored as 0",
            ZeroNormWarning,
            stacklevel=2,
        )
    doc_ids = np.asarray(docs.ids)
    tie_rank = np.empty(len(doc_ids), dtype=np.int64)
    tie_rank[np.argsort(doc_ids)] = np.arange(len(doc_ids))
    k_eff = min(k, docs.n_items)

    def rank_block(start: int, stop: int) -> list[RankedList]:
        scores = qn[start:stop] @ dn.T
        block = []
        for row, qid in zip(scores, queries.ids[start:stop]):
            idx = _topk_indices(row, tie_rank, k_eff)
            entries = tuple((str(doc_ids[j]), float(row[j])) for j in idx)
            block.append(RankedList(query_id=qid, entries=entries))
        return block

    n_q = queries.n_items
    if threads <= 1 or n_q == 1:
        return rank_block(0, n_q)
    bounds = np.linspace(0, n_q, num=min(threads, n_q) + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        blocks = pool.map(rank_block, bounds[:-1], bounds[1:])
    return [ranked for block in blocks for ranked in block]


def retrieve_projected(
    model: PcaModel,
    queries: EmbeddingMatrix,
    docs: EmbeddingMatrix,
    k: int = 10,
    threads: int = 1,
) -> list[RankedList]:
    """Project queries and docs through the model, then rank by cosine."""
    return retrieve_topk(project(model, queries), project(model, docs), k=k, threads=threads)


def write_run(rankings: list[RankedList], path: str | Path) -> None:
    """Write a run file: query_id<TAB>doc_id<TAB>rank<TAB>score, rank from 1."""
    lines = []
    for ranked in rankings:
        for rank, (doc_id, score) in enumerate(ranked.entries, start=1):
            lines.append(f"{ranked.query_id}\t{doc_id}\t{rank}\t{score:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_run(path: str | Path) -> list[RankedList]:
    """Read a run file back into ranked lists (query order = first appearance)."""
    path = Path(path)
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(
                    f"{path}: line {lineno} has {len(fields)} columns, expected 4"
                )
            qid, did, rank_text, score_text = fields
            try:
                rank = int(rank_text)
                score = float(score_text)
            except ValueError:
                raise FormatError(f"{path}: bad rank or score at line {lineno}") from None
            per_query.setdefault(qid, []).append((rank, did, score))
    if not per_query:
        raise FormatError(f"{path}: empty run file")
    rankings = []
    for qid, rows in per_query.items():
        rows.sort(key=lambda r: r[0])
        if [r[0] for r in rows] != list(range(1, len(rows) + 1)):
            raise FormatError(f"{path}: ranks for query {qid!r} are not 1..n")
        entries = tuple((did, score) for _, did, score in rows)
        rankings.append(RankedList(query_id=qid, entries=entries))
    return rankings
