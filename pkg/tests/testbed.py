"""Synthetic corpora used across the test suite.

The domain-shift testbed builds 64-dim embeddings whose first 8 coordinates
carry cluster-separable signal: each query sits at a sub-cluster offset
inside its cluster, and its relevant docs sit tightly around that offset.
The remaining 56 coordinates carry mild isotropic noise, and documents
additionally pick up strong off-signal artifact components that perturb
their norms.  Raw cosine can still find the right cluster but not the right
sub-cluster; a projection fit on queries keeps the signal axes (they
dominate the centered query covariance), discards the artifacts, and
resolves the fine structure.
"""

from __future__ import annotations

import numpy as np

from pcarank.store import EmbeddingMatrix, Qrels

DIM = 64
SIGNAL_DIMS = 8
N_CLUSTERS = 16
QUERIES_PER_CLUSTER = 6
DOCS_PER_QUERY = 2
CLUSTER_SPREAD = 16.0
QUERY_OFFSET_STD = 3.0
DOC_JITTER = 0.3
NOISE_STD = 1.0
ARTIFACT_DIMS = 6
ARTIFACT_STD = 30.0

# keeps exactly the signal dimensions: floor(0.125 * 64) = 8
SIGNAL_RATIO = SIGNAL_DIMS / DIM


def _embed(rng: np.random.Generator, signal: np.ndarray, artifact: bool) -> np.ndarray:
    vector = np.zeros(DIM)
    vector[:SIGNAL_DIMS] = signal
    vector[SIGNAL_DIMS:] = rng.normal(0.0, NOISE_STD, DIM - SIGNAL_DIMS)
    if artifact:
        stop = SIGNAL_DIMS + ARTIFACT_DIMS
        vector[SIGNAL_DIMS:stop] += rng.normal(0.0, ARTIFACT_STD, ARTIFACT_DIMS)
    return vector


def make_domain_shift_testbed(seed: int = 1234):
    """Returns (queries, docs, qrels) with per-query relevant sub-clusters."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, CLUSTER_SPREAD, (N_CLUSTERS, SIGNAL_DIMS))
    query_rows, query_ids = [], []
    doc_rows, doc_ids = [], []
    entries: dict[str, dict[str, int]] = {}
    for cluster in range(N_CLUSTERS):
        for i in range(QUERIES_PER_CLUSTER):
            qid = f"q{cluster}_{i}"
            offset = centers[cluster] + rng.normal(0.0, QUERY_OFFSET_STD, SIGNAL_DIMS)
            query_ids.append(qid)
            query_rows.append(_embed(rng, offset, artifact=False))
            relevant = {}
            for j in range(DOCS_PER_QUERY):
                did = f"d{cluster}_{i}_{j}"
                doc_signal = offset + rng.normal(0.0, DOC_JITTER, SIGNAL_DIMS)
                doc_ids.append(did)
                doc_rows.append(_embed(rng, doc_signal, artifact=True))
                relevant[did] = 1
            entries[qid] = relevant
    queries = EmbeddingMatrix(
        data=np.asarray(query_rows, dtype=np.float32), ids=tuple(query_ids)
    )
    docs = EmbeddingMatrix(data=np.asarray(doc_rows, dtype=np.float32), ids=tuple(doc_ids))
    return queries, docs, Qrels(entries=entries)


def make_iid_testbed(seed: int = 99, n_queries: int = 60, dim: int = 16):
    """One-cluster Gaussian data: each query's relevant doc is a noisy copy."""
    rng = np.random.default_rng(seed)
    scales = np.linspace(2.0, 0.5, dim)
    query_rows = rng.normal(0.0, 1.0, (n_queries, dim)) * scales
    doc_rows = [q + rng.normal(0.0, 0.3, dim) for q in query_rows]
    # distractors from the same cluster
    doc_rows.extend(rng.normal(0.0, 1.0, (n_queries, dim)) * scales)
    query_ids = tuple(f"q{i}" for i in range(n_queries))
    doc_ids = tuple(f"d{i}" for i in range(len(doc_rows)))
    entries = {f"q{i}": {f"d{i}": 1} for i in range(n_queries)}
    queries = EmbeddingMatrix(data=np.asarray(query_rows, dtype=np.float32), ids=query_ids)
    docs = EmbeddingMatrix(data=np.asarray(doc_rows, dtype=np.float32), ids=doc_ids)
    return queries, docs, Qrels(entries=entries)
