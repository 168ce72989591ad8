"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with -s to see them on success).  Tolerances and runtime budgets
are pinned here and nowhere else.
"""

import itertools
import time

import numpy as np

from conftest import random_matrix
from oracles import brute_force_topk, jacobi_eigh, ndcg_by_definition
from pcarank.cli import main
from pcarank.experiments import (
    ExperimentConfig,
    build_model,
    cross_validate,
    run_variant,
    similarity_distributions,
    variant_rankings,
)
from pcarank.metrics import evaluate, ndcg_at_k
from pcarank.pca import fit_pca, resolve_retention
from pcarank.retrieval import RankedList, read_run, retrieve_topk
from pcarank.spectrum import fit_power_law, ks_bootstrap_p
from pcarank.store import Qrels, load_embeddings, save_embeddings
from testbed import SIGNAL_RATIO, make_domain_shift_testbed, make_iid_testbed


def _report(name: str, ok: bool) -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


def _sign_fix(column: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(column)))
    return -column if column[pivot] < 0 else column


def test_pca_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2001)
    ok = True
    for _ in range(200):
        n = int(rng.integers(2, 21))
        d = int(rng.integers(1, 9))
        samples = random_matrix(rng, n, d)
        model = fit_pca(samples, resolve_retention(1.0, d, n))
        x = samples.data.astype(np.float64)
        centered = x - x.mean(axis=0)
        cov = centered.T @ centered / (n - 1)
        ev_oracle, vec_oracle = jacobi_eigh(cov)
        dprime = model.resolved_dim
        ok &= bool(np.allclose(model.eigenvalues, ev_oracle[:dprime], atol=1e-8))
        padded = np.concatenate([ev_oracle, [-np.inf]])
        for j in range(dprime):
            # eigenvectors are only well-defined away from degenerate pairs
            gap_above = j == 0 or padded[j - 1] - padded[j] > 1e-6
            gap_below = padded[j] - padded[j + 1] > 1e-6
            if gap_above and gap_below:
                ok &= bool(
                    np.allclose(
                        model.components[:, j], _sign_fix(vec_oracle[:, j]), atol=1e-8
                    )
                )
    elapsed = time.perf_counter() - start
    _report(f"pca oracle equivalence, 200 matrices in {elapsed:.2f}s", ok and elapsed < 5.0)


def test_retrieval_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2002)
    ok = True
    for _ in range(100):
        n_q = int(rng.integers(1, 51))
        n_d = int(rng.integers(5, 1001))
        d = int(rng.integers(2, 9))
        doc_data = rng.normal(size=(n_d, d))
        doc_data[1] = doc_data[0]  # guaranteed tie pair
        from pcarank.store import EmbeddingMatrix

        queries = EmbeddingMatrix(
            data=rng.normal(size=(n_q, d)), ids=tuple(f"q{i}" for i in range(n_q))
        )
        docs = EmbeddingMatrix(
            data=doc_data, ids=tuple(f"d{i:04d}" for i in range(n_d))
        )
        got = retrieve_topk(queries, docs, k=10)
        expected = brute_force_topk(queries, docs, 10)
        for ranked, oracle in zip(got, expected):
            ok &= ranked.doc_ids == tuple(doc_id for doc_id, _ in oracle)
    elapsed = time.perf_counter() - start
    _report(
        f"retrieval oracle equivalence, 100 instances in {elapsed:.2f}s",
        ok and elapsed < 10.0,
    )


def test_ndcg_definition_oracle():
    doc_ids = ["d1", "d2", "d3", "d4", "d5"]
    ok = True
    for grades in itertools.product((0, 1, 2), repeat=5):
        if not any(grades):
            continue
        by_doc = dict(zip(doc_ids, grades))
        positives = [g for g in grades if g > 0]
        qrels = Qrels(entries={"q": {d: g for d, g in by_doc.items() if g > 0}})
        for perm in itertools.permutations(doc_ids):
            scores = np.linspace(1.0, 0.2, 5)
            ranking = RankedList(query_id="q", entries=tuple(zip(perm, scores)))
            got = ndcg_at_k(ranking, qrels, k=10)
            want = ndcg_by_definition([by_doc[d] for d in perm], positives, 10)
            ok &= abs(got - want) < 1e-12
    # hand value: one relevant doc (grade 1) at rank 3
    hand = ndcg_at_k(
        RankedList(query_id="q", entries=(("a", 0.9), ("b", 0.8), ("hit", 0.7))),
        Qrels(entries={"q": {"hit": 1}}),
        k=10,
    )
    ok &= hand == 0.5
    _report("ndcg matches definition-level oracle exhaustively", ok)


def test_retention_resolution_values():
    ok = resolve_retention(0.1, 768, 1000).resolved_dim == 76
    ok &= resolve_retention(0.9, 768, 1000).resolved_dim == 691
    _report("retention resolution: 76 dims at r=0.1, 691 at r=0.9 (d=768)", ok)


def test_full_retention_invariance():
    rng = np.random.default_rng(2003)
    ok = True
    for _ in range(10):
        d = int(rng.integers(3, 10))
        n_q = int(rng.integers(d + 1, 40))
        n_d = int(rng.integers(10, 80))
        queries = random_matrix(rng, n_q, d, prefix="q")
        docs = random_matrix(rng, n_d, d, prefix="d")
        projected = variant_rankings(
            ExperimentConfig(variant="query_compression", retention_ratio=1.0),
            queries, docs,
        )
        mean = queries.data.astype(np.float64).mean(axis=0)
        from pcarank.store import EmbeddingMatrix

        centered = retrieve_topk(
            EmbeddingMatrix(data=queries.data.astype(np.float64) - mean, ids=queries.ids),
            EmbeddingMatrix(data=docs.data.astype(np.float64) - mean, ids=docs.ids),
            k=10,
        )
        ok &= [r.doc_ids for r in projected] == [r.doc_ids for r in centered]
        baseline = variant_rankings(ExperimentConfig(variant="baseline"), queries, docs)
        random_full = variant_rankings(
            ExperimentConfig(variant="random_compression", retention_ratio=1.0),
            queries, docs,
        )
        ok &= baseline == random_full  # scores included, bit-exact
    _report("full-retention invariance (centered-cosine and random=baseline)", ok)


def test_domain_shift_testbed():
    start = time.perf_counter()
    queries, docs, qrels = make_domain_shift_testbed()
    baseline = run_variant(ExperimentConfig(variant="baseline"), queries, docs, qrels)
    compressed = run_variant(
        ExperimentConfig(variant="query_compression", retention_ratio=SIGNAL_RATIO),
        queries, docs, qrels,
    )
    gain = compressed.macro.ndcg - baseline.macro.ndcg
    raw = similarity_distributions(queries, docs, qrels)
    model = build_model(
        ExperimentConfig(variant="query_compression", retention_ratio=SIGNAL_RATIO),
        queries, docs,
    )
    projected = similarity_distributions(queries, docs, qrels, model=model)
    raw_gap = raw.relevant.mean - raw.nonrelevant.mean
    projected_gap = projected.relevant.mean - projected.nonrelevant.mean
    elapsed = time.perf_counter() - start
    ok = gain >= 0.10 and projected_gap > raw_gap and elapsed < 30.0
    _report(
        f"domain-shift testbed: ndcg gain {gain:+.3f} (>= +0.10), "
        f"gap {raw_gap:.3f} -> {projected_gap:.3f}, {elapsed:.2f}s",
        ok,
    )


def test_spectrum_power_law_recovery():
    start = time.perf_counter()
    values = 100.0 * np.arange(1, 51, dtype=np.float64) ** -2.0
    fit = fit_power_law(values)
    p_first = ks_bootstrap_p(fit, values, n_boot=1000, seed=42)
    p_second = ks_bootstrap_p(fit, values, n_boot=1000, seed=42)
    elapsed = time.perf_counter() - start
    ok = (
        abs(fit.beta - 2.0) < 1e-9
        and fit.r_squared > 1.0 - 1e-12
        and p_first >= 0.10
        and p_first == p_second
        and elapsed < 60.0
    )
    _report(
        f"spectrum fit: beta {fit.beta:.12f}, r2 {fit.r_squared:.14f}, "
        f"p {p_first} at n_boot=1000 in {elapsed:.2f}s",
        ok,
    )


def test_cross_validation_reproducible_and_close():
    queries, docs, qrels = make_iid_testbed()
    config = ExperimentConfig(variant="query_compression", retention_ratio=0.5)
    first = cross_validate(3, 42, queries, docs, qrels, config)
    second = cross_validate(3, 42, queries, docs, qrels, config)
    in_sample = run_variant(config, queries, docs, qrels)
    difference = abs(first.macro.ndcg - in_sample.macro.ndcg)
    ok = first == second and difference <= 0.02
    _report(
        f"3-fold cv reproducible, |cv - in-sample| = {difference:.4f} (<= 0.02)", ok
    )


def test_cli_end_to_end(tmp_path):
    start = time.perf_counter()
    queries, docs, qrels = make_domain_shift_testbed()
    save_embeddings(queries, tmp_path / "q.emb")
    save_embeddings(docs, tmp_path / "d.emb")
    lines = [
        f"{qid}\t{did}\t{rel}"
        for qid, doc_map in qrels.entries.items()
        for did, rel in doc_map.items()
    ]
    (tmp_path / "qrels.tsv").write_text("\n".join(lines) + "\n")
    out_dir = tmp_path / "results"
    code = main([
        "run",
        "--queries", str(tmp_path / "q.emb"),
        "--docs", str(tmp_path / "d.emb"),
        "--qrels", str(tmp_path / "qrels.tsv"),
        "--out-dir", str(out_dir),
        "--ratio", str(SIGNAL_RATIO),
    ])
    ok = code == 0
    reloaded_qrels = Qrels(entries=qrels.entries)
    for variant in (
        "baseline", "query_compression", "query_doc_compression", "random_compression",
    ):
        run_file = out_dir / f"{variant}.run"
        metrics_file = out_dir / f"{variant}_metrics.tsv"
        ok &= run_file.exists() and metrics_file.exists()
        re_evaluated = evaluate(read_run(run_file), reloaded_qrels, 10)
        macro_row = [
            line for line in metrics_file.read_text().splitlines()
            if line.startswith("__macro__")
        ][0].split("\t")
        ok &= float(macro_row[1]) == re_evaluated.macro.ndcg
        ok &= float(macro_row[2]) == re_evaluated.macro.recall
        ok &= float(macro_row[3]) == re_evaluated.macro.precision
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60.0
    _report(
        f"cli end-to-end run (4 variants) in {elapsed:.2f}s, run files re-evaluate exactly",
        ok,
    )


def test_emb1_round_trip_under_cli_pipeline(tmp_path):
    # supporting check: artifacts written by one subcommand load in the next
    rng = np.random.default_rng(5)
    matrix = random_matrix(rng, 10, 6)
    save_embeddings(matrix, tmp_path / "m.emb")
    assert main([
        "convert", "--input", str(tmp_path / "m.emb"), "--output", str(tmp_path / "m.tsv"),
    ]) == 0
    assert np.array_equal(load_embeddings(tmp_path / "m.tsv").data, matrix.data)
