"""PCA fitting, retention resolution, and projection of embeddings.

Fitting follows the classic recipe: mean-center the sample matrix, take the
top eigenvectors of the unbiased sample covariance (or, when samples are
fewer than dimensions, the equivalent thin SVD of the centered matrix).
All arithmetic runs in float64; float32 appears only at file boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ToolkitError
from .store import EmbeddingMatrix, load_embeddings, save_embeddings

FittedOn = Literal["queries", "queries_and_documents", "custom"]
FITTED_ON_VALUES = ("queries", "queries_and_documents", "custom")

# Variances below this are numerical noise from degenerate directions and are
# clamped to exactly zero; the eigenvectors remain valid orthonormal fill.
EIGENVALUE_FLOOR = 1e-12

_ORTHONORMAL_ATOL = 1e-8
# float32 persistence rounds W; reloaded models get a looser orthonormality check.
_ORTHONORMAL_ATOL_LOADED = 1e-3


@dataclass(frozen=True)
class RetentionSpec:
    """A retention ratio together with the column count it resolves to."""

    ratio: float
    resolved_dim: int


def resolve_retention(ratio: float, dim: int, n_fit_samples: int) -> RetentionSpec:
    """Resolve a retention ratio to a target dimensionality.

    The kept dimension is floor(ratio * dim), never below 1, and capped at
    min(dim, n_fit_samples - 1) because centering costs one rank.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"retention ratio must be in (0, 1], got {ratio}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if n_fit_samples < 2:
        raise ValueError(f"need at least 2 fit samples, got {n_fit_samples}")
    # +1e-9 realises the mathematical floor for decimal ratios (0.3 * 10 -> 3).
    raw = math.floor(ratio * dim + 1e-9)
    resolved = max(1, min(raw, dim, n_fit_samples - 1))
    return RetentionSpec(ratio=ratio, resolved_dim=resolved)


@dataclass(frozen=True)
class PcaModel:
    """A fitted projection: mean vector, orthonormal columns, variances.

    ``components`` is (dim x resolved_dim) with orthonormal columns sorted by
    non-increasing eigenvalue.  Immutable and shareable across threads.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    fitted_on: FittedOn
    n_fit_samples: int

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    @property
    def resolved_dim(self) -> int:
        return self.components.shape[1]


def _validate_model(model: PcaModel, atol: float = _ORTHONORMAL_ATOL) -> None:
    if model.fitted_on not in FITTED_ON_VALUES:
        raise ValueError(f"unknown fitted_on value {model.fitted_on!r}")
    d, dprime = model.components.shape
    if model.mean.shape != (d,):
        raise ValueError("mean length does not match component rows")
    if model.eigenvalues.shape != (dprime,):
        raise ValueError("eigenvalue count does not match component columns")
    gram = model.components.T @ model.components
    if not np.allclose(gram, np.eye(dprime), atol=atol):
        raise ValueError("components are not orthonormal")
    ev = model.eigenvalues
    if np.any(ev < 0):
        raise ValueError("eigenvalues must be non-negative")
    if np.any(np.diff(ev) > 1e-9):
        raise ValueError("eigenvalues must be non-increasing")


def _apply_sign_convention(components: np.ndarray) -> np.ndarray:
    """Negate columns whose largest-magnitude entry is negative.

    Ties take the lowest index, so output is identical across eigensolvers.
    """
    flipped = components.copy()
    for j in range(flipped.shape[1]):
        col = flipped[:, j]
        pivot = int(np.argmax(np.abs(col)))
        if col[pivot] < 0:
            flipped[:, j] = -col
    return flipped


def fit_pca(
    samples: EmbeddingMatrix,
    retention: RetentionSpec,
    fitted_on: FittedOn = "custom",
) -> PcaModel:
    """Fit a PCA model on the sample rows, keeping retention.resolved_dim axes."""
    n, d = samples.n_items, samples.dim
    if n < 2:
        raise ValueError(f"need at least 2 samples to fit, got {n} (covariance undefined)")
    dprime = retention.resolved_dim
    if not 1 <= dprime <= min(d, n - 1):
        raise ValueError(
            f"retention resolves to {dprime} dims, valid range is 1..{min(d, n - 1)} "
            f"for {n} samples of dim {d}"
        )
    x = samples.data.astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    if n >= d:
        cov = centered.T @ centered / (n - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        eigvals = eigvals[order][:dprime]
        eigvecs = eigvecs[:, order][:, :dprime]
    else:
        # Thin SVD avoids forming a d x d covariance when samples are scarce.
        _, sing, vt = np.linalg.svd(centered, full_matrices=False)
        eigvals = (sing**2 / (n - 1))[:dprime]
        eigvecs = vt.T[:, :dprime]
    eigvals = np.where(eigvals < EIGENVALUE_FLOOR, 0.0, eigvals)
    components = _apply_sign_convention(eigvecs)
    model = PcaModel(
        mean=mean,
        components=components,
        eigenvalues=eigvals,
        fitted_on=fitted_on,
        n_fit_samples=n,
    )
    _validate_model(model)
    return model


def project(model: PcaModel, matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Project rows into the model space: row -> (row - mean) @ components."""
    if matrix.dim != model.dim:
        raise ValueError(
            f"matrix dim {matrix.dim} does not match model dim {model.dim}"
        )
    projected = (matrix.data.astype(np.float64) - model.mean) @ model.components
    return EmbeddingMatrix(data=projected, ids=matrix.ids)


def random_projection_model(dim: int, ratio: float, seed: int) -> PcaModel:
    """A baseline model that keeps a random subset of coordinates.

    Coordinates are sampled without replacement from a PRNG seeded by
    ``seed``; the same seed always yields the same kept set.  Eigenvalues are
    set to 1 (no variance information).
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    kept_count = math.floor(ratio * dim + 1e-9)
    if kept_count < 1:
        raise ValueError(f"ratio {ratio} keeps 0 of {dim} dimensions")
    rng = np.random.default_rng(seed)
    kept = np.sort(rng.choice(dim, size=kept_count, replace=False))
    components = np.zeros((dim, kept_count))
    components[kept, np.arange(kept_count)] = 1.0
    model = PcaModel(
        mean=np.zeros(dim),
        components=components,
        eigenvalues=np.ones(kept_count),
        fitted_on="custom",
        n_fit_samples=0,
    )
    _validate_model(model)
    return model


def save_model(model: PcaModel, directory: str | Path, ratio: float | None = None) -> None:
    """Persist a model: components and mean as EMB1, eigenvalues as TSV.

    Components are stored transposed (resolved_dim rows of length dim).
    EMB1 is float32, so reloaded models carry float32 rounding.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    comp = EmbeddingMatrix(
        data=model.components.T.astype(np.float32),
        ids=tuple(f"component_{i}" for i in range(model.resolved_dim)),
    )
    save_embeddings(comp, directory / "components.emb")
    mean = EmbeddingMatrix(data=model.mean.astype(np.float32)[None, :], ids=("mean",))
    save_embeddings(mean, directory / "mean.emb")
    ev_lines = "\n".join(repr(float(v)) for v in model.eigenvalues)
    (directory / "eigenvalues.tsv").write_text(ev_lines + "\n", encoding="utf-8")
    manifest = {
        "fitted_on": model.fitted_on,
        "n_fit_samples": model.n_fit_samples,
        "ratio": ratio,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def load_model(directory: str | Path) -> PcaModel:
    """Load a model persisted by :func:`save_model`."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ToolkitError(f"{directory}: not a model directory (missing manifest.json)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    comp = load_embeddings(directory / "components.emb")
    mean = load_embeddings(directory / "mean.emb")
    ev_text = (directory / "eigenvalues.tsv").read_text(encoding="utf-8")
    eigenvalues = np.asarray(
        [float(line) for line in ev_text.splitlines() if line.strip()], dtype=np.float64
    )
    model = PcaModel(
        mean=mean.data.astype(np.float64)[0],
        components=comp.data.astype(np.float64).T,
        eigenvalues=eigenvalues,
        fitted_on=manifest["fitted_on"],
        n_fit_samples=int(manifest["n_fit_samples"]),
    )
    _validate_model(model, atol=_ORTHONORMAL_ATOL_LOADED)
    return model
