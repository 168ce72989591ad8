"""Pydantic request and response models for the HTTP service.

Requests reference files by path on the service host; the service reads and
writes them directly so large matrices never travel over the wire.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Variant = Literal[
    "baseline", "query_compression", "query_doc_compression", "random_compression"
]


class FitRequest(BaseModel):
    samples: str = Field(description="EMB1 or TSV matrix to fit on")
    out_dir: str = Field(description="directory the model is written to")
    ratio: float = 0.9
    fitted_on: Literal["queries", "queries_and_documents", "custom"] = "custom"


class FitResponse(BaseModel):
    out_dir: str
    dim: int
    resolved_dim: int
    n_fit_samples: int
    eigenvalue_sum: float


class ProjectRequest(BaseModel):
    model_dir: str
    input: str
    out: str


class ProjectResponse(BaseModel):
    out: str
    n_items: int
    dim: int


class RetrieveRequest(BaseModel):
    queries: str
    docs: str
    out: str
    k: int = 10
    model_dir: Optional[str] = None
    threads: int = 1


class RetrieveResponse(BaseModel):
    out: str
    n_queries: int
    n_docs: int
    k: int
    zero_norm_queries: int
    zero_norm_docs: int


class MacroMetrics(BaseModel):
    ndcg: float
    recall: float
    precision: float


class EvalRequest(BaseModel):
    run: str
    qrels: str
    k: int = 10
    out: Optional[str] = None


class EvalResponse(BaseModel):
    macro: MacroMetrics
    k: int
    n_evaluated: int
    n_skipped: int
    out: Optional[str] = None


class RunRequest(BaseModel):
    queries: str
    docs: str
    qrels: str
    out_dir: str
    variants: list[Variant] = Field(
        default=["baseline", "query_compression", "query_doc_compression", "random_compression"]
    )
    ratio: float = 0.9
    k: int = 10
    seed: int = 42
    dataset: str = ""
    model_name: str = ""
    threads: int = 1


class VariantResult(BaseModel):
    variant: Variant
    macro: MacroMetrics
    n_evaluated: int
    n_skipped: int
    run_file: str
    metrics_file: str
    improvement_pct: Optional[float] = None
    zero_norm_queries: int = 0
    zero_norm_docs: int = 0


class RunResponse(BaseModel):
    results: list[VariantResult]
    comparison_file: str


class SweepRequest(BaseModel):
    queries: str
    docs: str
    qrels: str
    out: str
    variant: Variant = "query_compression"
    ratios: Optional[list[float]] = None
    k: int = 10
    seed: int = 42
    threads: int = 1


class SweepPoint(BaseModel):
    ratio: float
    macro: MacroMetrics


class SweepResponse(BaseModel):
    points: list[SweepPoint]
    out: str


class CvRequest(BaseModel):
    queries: str
    docs: str
    qrels: str
    variant: Variant = "query_compression"
    folds: int = 3
    ratio: float = 0.9
    k: int = 10
    seed: int = 42
    out: Optional[str] = None
    threads: int = 1


class SpectrumRequest(BaseModel):
    samples: Optional[str] = None
    eigenvalues: Optional[str] = None
    out: Optional[str] = None
    n_boot: int = 1000
    seed: int = 42


class SpectrumResponse(BaseModel):
    beta: float
    ci_low: float
    ci_high: float
    r_squared: float
    k_min: int
    ks_stat: float
    p_value: float
    n_eigenvalues: int
    out: Optional[str] = None


class FamiliarityRequest(BaseModel):
    embeddings: str
    gains: Optional[str] = Field(
        default=None,
        description="optional TSV of label<TAB>familiarity<TAB>gain_pct rows to correlate",
    )


class TextFamiliarity(BaseModel):
    original_id: str
    familiarity: float
    n_paraphrases: int


class FamiliarityResponse(BaseModel):
    domain_familiarity: float
    per_text: list[TextFamiliarity]
    pearson_r: Optional[float] = None
    pearson_p: Optional[float] = None


class SimdistRequest(BaseModel):
    queries: str
    docs: str
    qrels: str
    variant: Variant = "baseline"
    ratio: float = 0.9
    k: int = 10
    seed: int = 42
    threads: int = 1


class PairStats(BaseModel):
    mean: float
    std: float
    count: int


class SimdistResponse(BaseModel):
    relevant: PairStats
    nonrelevant: PairStats
    mean_gap: float


class ConvertRequest(BaseModel):
    input: str
    output: str


class ConvertResponse(BaseModel):
    output: str
    n_items: int
    dim: int
    format: Literal["emb1", "tsv"]
