"""FastAPI service wrapping the toolkit.

Every operation is exposed as a POST endpoint taking file paths on the
service host.  Handlers are synchronous (CPU-bound numpy work) and run in
the framework's worker pool.  Data and validation problems map to 400 with
a human-readable detail message.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import experiments, familiarity, metrics, pca, retrieval, spectrum, store
from ..errors import ToolkitError
from . import schemas


def _macro(report: metrics.MetricsReport) -> schemas.MacroMetrics:
    return schemas.MacroMetrics(
        ndcg=report.macro.ndcg,
        recall=report.macro.recall,
        precision=report.macro.precision,
    )


def _load_eigenvalue_file(path: str) -> list[float]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [float(line) for line in lines if line.strip()]


def create_app() -> FastAPI:
    app = FastAPI(title="pcarank", version="0.1.0")

    @app.exception_handler(ToolkitError)
    @app.exception_handler(ValueError)
    @app.exception_handler(OSError)
    async def data_error_handler(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(req: schemas.FitRequest) -> schemas.FitResponse:
        samples = store.load_embeddings(req.samples)
        retention = pca.resolve_retention(req.ratio, samples.dim, samples.n_items)
        model = pca.fit_pca(samples, retention, fitted_on=req.fitted_on)
        pca.save_model(model, req.out_dir, ratio=req.ratio)
        return schemas.FitResponse(
            out_dir=req.out_dir,
            dim=model.dim,
            resolved_dim=model.resolved_dim,
            n_fit_samples=model.n_fit_samples,
            eigenvalue_sum=float(model.eigenvalues.sum()),
        )

    @app.post("/project", response_model=schemas.ProjectResponse)
    def project_endpoint(req: schemas.ProjectRequest) -> schemas.ProjectResponse:
        model = pca.load_model(req.model_dir)
        matrix = store.load_embeddings(req.input)
        projected = pca.project(model, matrix)
        store.save_embeddings(projected, req.out)
        return schemas.ProjectResponse(
            out=req.out, n_items=projected.n_items, dim=projected.dim
        )

    @app.post("/retrieve", response_model=schemas.RetrieveResponse)
    def retrieve(req: schemas.RetrieveRequest) -> schemas.RetrieveResponse:
        queries = store.load_embeddings(req.queries)
        docs = store.load_embeddings(req.docs)
        q_space, d_space = queries, docs
        if req.model_dir is not None:
            model = pca.load_model(req.model_dir)
            q_space, d_space = pca.project(model, queries), pca.project(model, docs)
        rankings = retrieval.retrieve_topk(q_space, d_space, k=req.k, threads=req.threads)
        retrieval.write_run(rankings, req.out)
        # Counters reflect the space that was scored: projection can zero a row.
        return schemas.RetrieveResponse(
            out=req.out,
            n_queries=queries.n_items,
            n_docs=docs.n_items,
            k=req.k,
            zero_norm_queries=retrieval.zero_norm_count(q_space),
            zero_norm_docs=retrieval.zero_norm_count(d_space),
        )

    @app.post("/eval", response_model=schemas.EvalResponse)
    def eval_endpoint(req: schemas.EvalRequest) -> schemas.EvalResponse:
        run = retrieval.read_run(req.run)
        qrels = store.load_qrels(req.qrels)
        report = metrics.evaluate(run, qrels, req.k)
        if req.out is not None:
            metrics.write_report_tsv(report, req.out)
        return schemas.EvalResponse(
            macro=_macro(report),
            k=report.k,
            n_evaluated=report.n_evaluated,
            n_skipped=report.n_skipped,
            out=req.out,
        )

    @app.post("/run", response_model=schemas.RunResponse)
    def run_experiment(req: schemas.RunRequest) -> schemas.RunResponse:
        queries = store.load_embeddings(req.queries)
        docs = store.load_embeddings(req.docs)
        qrels = store.load_qrels(req.qrels)
        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        variants = list(req.variants)
        if "baseline" not in variants:
            variants.insert(0, "baseline")
        reports: dict[str, metrics.MetricsReport] = {}
        files: dict[str, tuple[str, str]] = {}
        zero_norms: dict[str, tuple[int, int]] = {}
        for variant in variants:
            config = experiments.ExperimentConfig(
                variant=variant, retention_ratio=req.ratio, k=req.k, seed=req.seed
            )
            model = experiments.build_model(config, queries, docs)
            if model is None:
                q_space, d_space = queries, docs
            else:
                q_space, d_space = pca.project(model, queries), pca.project(model, docs)
            rankings = retrieval.retrieve_topk(q_space, d_space, k=req.k, threads=req.threads)
            run_file = out_dir / f"{variant}.run"
            metrics_file = out_dir / f"{variant}_metrics.tsv"
            retrieval.write_run(rankings, run_file)
            report = metrics.evaluate(rankings, qrels, req.k)
            metrics.write_report_tsv(report, metrics_file)
            reports[variant] = report
            files[variant] = (str(run_file), str(metrics_file))
            zero_norms[variant] = (
                retrieval.zero_norm_count(q_space),
                retrieval.zero_norm_count(d_space),
            )
        base = reports["baseline"].macro.ndcg
        rows = [
            experiments.ComparisonRow(
                dataset=req.dataset,
                variant=variant,
                metric_baseline=base,
                metric_variant=reports[variant].macro.ndcg,
                improvement_pct=(
                    100.0 * (reports[variant].macro.ndcg - base) / base if base > 0 else None
                ),
                model=req.model_name,
            )
            for variant in variants
            if variant != "baseline"
        ]
        comparison_file = out_dir / "comparison.tsv"
        experiments.write_comparison_tsv(rows, comparison_file)
        pct_by_variant = {row.variant: row.improvement_pct for row in rows}
        results = [
            schemas.VariantResult(
                variant=variant,
                macro=_macro(reports[variant]),
                n_evaluated=reports[variant].n_evaluated,
                n_skipped=reports[variant].n_skipped,
                run_file=files[variant][0],
                metrics_file=files[variant][1],
                improvement_pct=pct_by_variant.get(variant),
                zero_norm_queries=zero_norms[variant][0],
                zero_norm_docs=zero_norms[variant][1],
            )
            for variant in variants
        ]
        return schemas.RunResponse(results=results, comparison_file=str(comparison_file))

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        queries = store.load_embeddings(req.queries)
        docs = store.load_embeddings(req.docs)
        qrels = store.load_qrels(req.qrels)
        ratios = req.ratios if req.ratios else list(experiments.DEFAULT_RATIO_GRID)
        results = experiments.retention_sweep(
            ratios,
            queries,
            docs,
            qrels,
            variant=req.variant,
            k=req.k,
            seed=req.seed,
            threads=req.threads,
        )
        experiments.write_sweep_tsv(results, req.out)
        points = [
            schemas.SweepPoint(ratio=ratio, macro=_macro(report))
            for ratio, report in results
        ]
        return schemas.SweepResponse(points=points, out=req.out)

    @app.post("/cv", response_model=schemas.EvalResponse)
    def cv(req: schemas.CvRequest) -> schemas.EvalResponse:
        queries = store.load_embeddings(req.queries)
        docs = store.load_embeddings(req.docs)
        qrels = store.load_qrels(req.qrels)
        config = experiments.ExperimentConfig(
            variant=req.variant,
            retention_ratio=req.ratio,
            k=req.k,
            seed=req.seed,
            cv_folds=req.folds,
        )
        report = experiments.cross_validate(
            req.folds, req.seed, queries, docs, qrels, config, threads=req.threads
        )
        if req.out is not None:
            metrics.write_report_tsv(report, req.out)
        return schemas.EvalResponse(
            macro=_macro(report),
            k=report.k,
            n_evaluated=report.n_evaluated,
            n_skipped=report.n_skipped,
            out=req.out,
        )

    @app.post("/spectrum", response_model=schemas.SpectrumResponse)
    def spectrum_endpoint(req: schemas.SpectrumRequest) -> schemas.SpectrumResponse:
        if (req.samples is None) == (req.eigenvalues is None):
            raise ValueError("provide exactly one of 'samples' or 'eigenvalues'")
        if req.samples is not None:
            samples = store.load_embeddings(req.samples)
            retention = pca.resolve_retention(1.0, samples.dim, samples.n_items)
            model = pca.fit_pca(samples, retention)
            eigenvalues = [float(v) for v in model.eigenvalues]
        else:
            eigenvalues = _load_eigenvalue_file(req.eigenvalues)
        fit = spectrum.fit_power_law(eigenvalues)
        p = spectrum.ks_bootstrap_p(fit, eigenvalues, n_boot=req.n_boot, seed=req.seed)
        fit = spectrum.with_p_value(fit, p)
        if req.out is not None:
            values = np.asarray(eigenvalues, dtype=np.float64)
            values = values[values > spectrum.POSITIVE_FLOOR]
            spec = spectrum.Spectrum(
                eigenvalues=values, explained_ratio=values / values.sum()
            )
            spectrum.write_spectrum_report(spec, fit, req.out)
        return schemas.SpectrumResponse(
            beta=fit.beta,
            ci_low=fit.ci_beta[0],
            ci_high=fit.ci_beta[1],
            r_squared=fit.r_squared,
            k_min=fit.k_min,
            ks_stat=fit.ks_stat,
            p_value=p,
            n_eigenvalues=len(eigenvalues),
            out=req.out,
        )

    @app.post("/familiarity", response_model=schemas.FamiliarityResponse)
    def familiarity_endpoint(req: schemas.FamiliarityRequest) -> schemas.FamiliarityResponse:
        matrix = store.load_embeddings(req.embeddings)
        sets = familiarity.parse_paraphrase_sets(matrix)
        per_text = [
            schemas.TextFamiliarity(
                original_id=s.original_id,
                familiarity=familiarity.text_familiarity(s),
                n_paraphrases=len(s.paraphrases),
            )
            for s in sets
        ]
        df = familiarity.domain_familiarity(sets)
        pearson_r = pearson_p = None
        if req.gains is not None:
            points = []
            for lineno, line in enumerate(
                Path(req.gains).read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ValueError(
                        f"{req.gains}: line {lineno} must be label<TAB>familiarity<TAB>gain"
                    )
                points.append((float(fields[1]), float(fields[2])))
            pearson_r, pearson_p = familiarity.familiarity_vs_gain(points)
        return schemas.FamiliarityResponse(
            domain_familiarity=df,
            per_text=per_text,
            pearson_r=pearson_r,
            pearson_p=pearson_p,
        )

    @app.post("/simdist", response_model=schemas.SimdistResponse)
    def simdist(req: schemas.SimdistRequest) -> schemas.SimdistResponse:
        queries = store.load_embeddings(req.queries)
        docs = store.load_embeddings(req.docs)
        qrels = store.load_qrels(req.qrels)
        config = experiments.ExperimentConfig(
            variant=req.variant, retention_ratio=req.ratio, k=req.k, seed=req.seed
        )
        model = experiments.build_model(config, queries, docs)
        result = experiments.similarity_distributions(
            queries, docs, qrels, model=model, k=req.k, threads=req.threads
        )
        return schemas.SimdistResponse(
            relevant=schemas.PairStats(**vars(result.relevant)),
            nonrelevant=schemas.PairStats(**vars(result.nonrelevant)),
            mean_gap=result.relevant.mean - result.nonrelevant.mean,
        )

    @app.post("/convert", response_model=schemas.ConvertResponse)
    def convert(req: schemas.ConvertRequest) -> schemas.ConvertResponse:
        raw = Path(req.input).read_bytes()
        if not raw:
            raise ValueError(f"{req.input}: empty matrix")
        matrix = store.load_embeddings(req.input)
        if raw[:4] == store.EMB1_MAGIC:
            store.save_embeddings_tsv(matrix, req.output)
            written = "tsv"
        else:
            store.save_embeddings(matrix, req.output)
            written = "emb1"
        return schemas.ConvertResponse(
            output=req.output, n_items=matrix.n_items, dim=matrix.dim, format=written
        )

    return app
