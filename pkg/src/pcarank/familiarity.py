"""Paraphrase-robustness familiarity scores from precomputed embeddings.

Text familiarity is the mean cosine between a text's embedding and the
embeddings of its paraphrases; domain familiarity averages that over texts.
Paraphrase membership is encoded in the ids of a single embedding matrix:
``<original_id>`` rows are originals, ``<original_id>#p<j>`` rows their
paraphrases.  An id ending in ``#p<digits>`` is always a paraphrase, so
original ids must not use that suffix themselves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .retrieval import cosine_similarity
from .store import EmbeddingMatrix

_PARAPHRASE_ID = re.compile(r"^(?P<original>.+)#p(?P<index>\d+)$")


@dataclass(frozen=True)
class ParaphraseSet:
    """One text embedding and the embeddings of its paraphrases."""

    original_id: str
    original: np.ndarray
    paraphrases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.paraphrases:
            raise ValueError(f"{self.original_id!r}: paraphrase list is empty")
        vectors = (self.original, *self.paraphrases)
        dim = self.original.shape[-1]
        for v in vectors:
            if v.ndim != 1 or v.shape[0] != dim:
                raise ValueError(f"{self.original_id!r}: vectors have mixed dimensions")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{self.original_id!r}: non-finite vector")
            if not np.any(v != 0.0):
                raise ValueError(f"{self.original_id!r}: zero-norm vector")


def text_familiarity(paraphrase_set: ParaphraseSet) -> float:
    """Mean cosine between the original and each of its paraphrases."""
    return float(
        np.mean(
            [
                cosine_similarity(paraphrase_set.original, p)
                for p in paraphrase_set.paraphrases
            ]
        )
    )


def domain_familiarity(sets: list[ParaphraseSet]) -> float:
    """Mean text familiarity over a collection of paraphrase sets."""
    if not sets:
        raise ValueError("need at least one paraphrase set")
    return float(np.mean([text_familiarity(s) for s in sets]))


def familiarity_vs_gain(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Pearson correlation between familiarity and gain, with two-sided p.

    The p-value uses the t distribution with n-2 degrees of freedom.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    xs = np.asarray([p[0] for p in points], dtype=np.float64)
    ys = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("zero variance in one coordinate")
    result = stats.pearsonr(xs, ys)
    return float(result.statistic), float(result.pvalue)


def parse_paraphrase_sets(matrix: EmbeddingMatrix) -> list[ParaphraseSet]:
    """Group a matrix into paraphrase sets via the id convention.

    Every ``<id>#p<j>`` row must have a matching ``<id>`` original and every
    original must have at least one paraphrase; anything else is an error.
    Sets come back in first-appearance order of the original id.
    """
    originals: dict[str, np.ndarray] = {}
    paraphrases: dict[str, list[tuple[int, np.ndarray]]] = {}
    order: list[str] = []
    for item_id, row in zip(matrix.ids, matrix.data):
        match = _PARAPHRASE_ID.match(item_id)
        if match:
            key = match.group("original")
            paraphrases.setdefault(key, []).append(
                (int(match.group("index")), np.asarray(row, dtype=np.float64))
            )
        else:
            originals[item_id] = np.asarray(row, dtype=np.float64)
            order.append(item_id)
    orphans = sorted(set(paraphrases) - set(originals))
    if orphans:
        raise ValueError(f"paraphrases without originals: {orphans}")
    childless = sorted(set(originals) - set(paraphrases))
    if childless:
        raise ValueError(f"originals without paraphrases: {childless}")
    if not order:
        raise ValueError("no paraphrase sets found")
    sets = []
    for original_id in order:
        members = sorted(paraphrases[original_id], key=lambda item: item[0])
        sets.append(
            ParaphraseSet(
                original_id=original_id,
                original=originals[original_id],
                paraphrases=tuple(vec for _, vec in members),
            )
        )
    return sets
