"""PCA compression toolkit for adapting dense retrievers to new domains."""

from .errors import FormatError, ToolkitError
from .experiments import (
    ComparisonRow,
    ExperimentConfig,
    SimilarityStats,
    compare,
    cross_validate,
    retention_sweep,
    run_variant,
    similarity_distributions,
    success_summary,
)
from .familiarity import (
    ParaphraseSet,
    domain_familiarity,
    familiarity_vs_gain,
    parse_paraphrase_sets,
    text_familiarity,
)
from .metrics import (
    MetricsReport,
    QueryMetrics,
    evaluate,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)
from .pca import (
    PcaModel,
    RetentionSpec,
    fit_pca,
    load_model,
    project,
    random_projection_model,
    resolve_retention,
    save_model,
)
from .retrieval import (
    RankedList,
    ZeroNormWarning,
    cosine_similarity,
    read_run,
    retrieve_projected,
    retrieve_topk,
    write_run,
)
from .spectrum import Spectrum, SpectrumFit, fit_power_law, ks_bootstrap_p, spectrum_of
from .store import (
    EmbeddingMatrix,
    Qrels,
    load_embeddings,
    load_qrels,
    save_embeddings,
    save_embeddings_tsv,
)

__version__ = "0.1.0"
