"""Eigenvalue-spectrum diagnostics: rank-size power-law fit with automatic
tail selection and a bootstrap goodness-of-fit p-value.

The spectrum tail is modeled as lambda_k ~ C * k^(-beta).  For every
candidate tail start with at least 10 ranks, the decay exponent is fit by
OLS on log-log axes and scored by a Kolmogorov-Smirnov distance between the
empirical CDF of observed tail log-eigenvalues and the CDF of the fitted
values at the same ranks; the tail start minimizing that distance wins.
Because ranked eigenvalues are not an i.i.d. sample, the classical
continuous-power-law KS test does not apply; the p-value instead comes from
a parametric bootstrap that resamples the observed log-residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .pca import PcaModel

MIN_TAIL = 10
POSITIVE_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectrumFit:
    """A fitted rank-size power law over the spectrum tail."""

    beta: float
    intercept: float
    k_min: int
    r_squared: float
    ks_stat: float
    ci_beta: tuple[float, float]
    p_value: float | None = None


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a fitted model with their explained-variance ratios."""

    eigenvalues: np.ndarray
    explained_ratio: np.ndarray


def _prepare(eigenvalues: Sequence[float], check_monotone: bool) -> np.ndarray:
    values = np.asarray(eigenvalues, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("eigenvalues must be a flat list")
    values = values[values > POSITIVE_FLOOR]
    if values.size < MIN_TAIL:
        raise ValueError(
            f"need at least {MIN_TAIL} strictly positive eigenvalues, got {values.size}"
        )
    if check_monotone and np.any(np.diff(values) > 1e-9 * np.abs(values[:-1])):
        raise ValueError("eigenvalues must be non-increasing")
    return values


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Least squares y = a + b*x; returns (a, b, ss_res, ss_tot)."""
    xm = x.mean()
    ym = y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    return intercept, slope, float((resid**2).sum()), float(((y - ym) ** 2).sum())


# Fitted log-values within this of an observed point count as <= it, so an
# exact power law scores a KS of exactly 0 despite float roundoff.
_KS_LOG_TOL = 1e-9


def _ks_distance(observed: np.ndarray, fitted: np.ndarray) -> float:
    """Sup distance between the two step CDFs, evaluated at observed points."""
    t = observed.size
    obs_sorted = np.sort(observed)
    fit_sorted = np.sort(fitted)
    f_emp = np.searchsorted(obs_sorted, observed + _KS_LOG_TOL, side="right") / t
    f_fit = np.searchsorted(fit_sorted, observed + _KS_LOG_TOL, side="right") / t
    return float(np.max(np.abs(f_emp - f_fit)))


def _fit(values: np.ndarray) -> SpectrumFit:
    n = values.size
    log_k = np.log(np.arange(1, n + 1, dtype=np.float64))
    log_v = np.log(values)
    best: tuple[float, int] | None = None
    for k_min in range(1, n - MIN_TAIL + 2):
        x = log_k[k_min - 1 :]
        y = log_v[k_min - 1 :]
        intercept, slope, _, _ = _ols(x, y)
        ks = _ks_distance(y, intercept + slope * x)
        if best is None or ks < best[0]:
            best = (ks, k_min)
    ks_stat, k_min = best
    x = log_k[k_min - 1 :]
    y = log_v[k_min - 1 :]
    intercept, slope, ss_res, ss_tot = _ols(x, y)
    beta = -slope
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = x.size - 2
    se = np.sqrt(ss_res / dof / float(((x - x.mean()) ** 2).sum()))
    half = float(stats.t.ppf(0.975, dof) * se)
    return SpectrumFit(
        beta=beta,
        intercept=intercept,
        k_min=k_min,
        r_squared=r_squared,
        ks_stat=ks_stat,
        ci_beta=(beta - half, beta + half),
    )


def fit_power_law(eigenvalues: Sequence[float]) -> SpectrumFit:
    """Fit the spectrum tail, choosing the tail start that minimizes KS.

    Eigenvalues at or below the positive floor are truncated first; at least
    10 strictly positive values must remain.  Ties on KS take the earliest
    tail start.
    """
    return _fit(_prepare(eigenvalues, check_monotone=True))


def ks_bootstrap_p(
    fit: SpectrumFit,
    eigenvalues: Sequence[float],
    n_boot: int = 1000,
    seed: int = 42,
) -> float:
    """Bootstrap p-value: fraction of replicates whose KS >= the observed one.

    Each replicate keeps the observed head (ranks before the fitted tail
    start), rebuilds the tail as fitted-value * exp(resampled log-residual),
    and is refit with the full tail-selection procedure.  Replicate PRNG
    streams derive from (seed, replicate index), so the result does not
    depend on execution order.
    """
    if n_boot < 1:
        raise ValueError(f"n_boot must be >= 1, got {n_boot}")
    values = _prepare(eigenvalues, check_monotone=True)
    ranks = np.arange(fit.k_min, values.size + 1, dtype=np.float64)
    fitted_tail = np.exp(fit.intercept - fit.beta * np.log(ranks))
    residuals = np.log(values[fit.k_min - 1 :]) - np.log(fitted_tail)
    head = values[: fit.k_min - 1]
    exceed = 0
    for i in range(n_boot):
        rng = np.random.default_rng([seed, i])
        eps = rng.choice(residuals, size=residuals.size, replace=True)
        replicate = np.concatenate([head, fitted_tail * np.exp(eps)])
        if _fit(replicate).ks_stat >= fit.ks_stat:
            exceed += 1
    return exceed / n_boot


def spectrum_of(model: PcaModel) -> Spectrum:
    """Eigenvalues of a model plus their explained-variance ratios."""
    eigenvalues = np.asarray(model.eigenvalues, dtype=np.float64)
    total = float(eigenvalues.sum())
    if total <= 0.0:
        raise ValueError("model has no variance to explain")
    return Spectrum(eigenvalues=eigenvalues, explained_ratio=eigenvalues / total)


def write_spectrum_report(
    spectrum: Spectrum, fit: SpectrumFit, path: str | Path
) -> None:
    """Summary block (comment lines) followed by k/eigenvalue/ratio rows."""
    lines = [
        f"# beta\t{float(fit.beta)!r}",
        f"# ci_low\t{float(fit.ci_beta[0])!r}",
        f"# ci_high\t{float(fit.ci_beta[1])!r}",
        f"# intercept\t{float(fit.intercept)!r}",
        f"# r_squared\t{float(fit.r_squared)!r}",
        f"# k_min\t{fit.k_min}",
        f"# ks_stat\t{float(fit.ks_stat)!r}",
        f"# p_value\t{'' if fit.p_value is None else repr(float(fit.p_value))}",
    ]
    for k, (ev, ratio) in enumerate(
        zip(spectrum.eigenvalues, spectrum.explained_ratio), start=1
    ):
        lines.append(f"{k}\t{float(ev)!r}\t{float(ratio)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def with_p_value(fit: SpectrumFit, p: float) -> SpectrumFit:
    return replace(fit, p_value=p)
