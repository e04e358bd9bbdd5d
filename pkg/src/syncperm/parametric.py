"""Wald-type (chi-square reference) and ANOVA-type (Box F reference) tests.

Both statistics use the covariance estimate of sqrt(N) times the vector of
cell means, ``Sigma = diag(N * s2_ij / n_ij)``, which is what makes the
chi-square limit hold when the cells have different sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import Dataset, EffectSpec, summarize
from .errors import InvalidInputError
from .numerics import SymMatrix, chi2_sf, f_sf, jacobi_eigh, pseudo_inverse


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df1: float | None
    df2: float | None
    p_value: float
    method: str
    n_resamples: int | None = None
    degenerate: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)

    __test__ = False  # keep pytest from collecting this class


def as_effect(e) -> EffectSpec:
    return e if isinstance(e, EffectSpec) else EffectSpec.of(e)


def _require_variances(d: Dataset):
    if np.any(d.n < 2):
        raise InvalidInputError(
            f"variance-based tests need at least 2 observations per cell, got n={d.n.tolist()}"
        )


def covariance_estimate(d: Dataset) -> np.ndarray:
    """Diagonal of ``diag(N * s2_ij / n_ij)``."""
    s = summarize(d)
    return d.N * s.variances / s.counts


def _matrix_rank(m: np.ndarray, tol_rel: float = 1e-12) -> int:
    w, _ = jacobi_eigh(SymMatrix(m))
    top = float(np.max(np.abs(w))) if w.size else 0.0
    return int(np.sum(w > tol_rel * top)) if top > 0 else 0


def wts(d: Dataset, e, contrast=None) -> TestResult:
    """Wald-type statistic with its asymptotic chi-square p-value.

    ``contrast`` may override the effect's contrast with any r x 4 matrix.
    """
    _require_variances(d)
    e = as_effect(e)
    C = np.atleast_2d(np.asarray(e.c if contrast is None else contrast, dtype=float))
    s = summarize(d)
    sigma = np.diag(d.N * s.variances / s.counts)
    q = C @ s.means
    middle = SymMatrix(C @ sigma @ C.T)
    rank = _matrix_rank(C @ C.T)
    if np.max(np.abs(middle.array)) == 0.0:
        return _degenerate("WTS", q, df1=float(rank), df2=None)
    stat = float(d.N * q @ pseudo_inverse(middle).array @ q)
    stat = max(stat, 0.0)
    return TestResult(stat, float(rank), None, chi2_sf(stat, rank), "WTS")


def ats(d: Dataset, e, contrast=None) -> TestResult:
    """ANOVA-type statistic with Box-approximated F degrees of freedom."""
    _require_variances(d)
    e = as_effect(e)
    C = np.atleast_2d(np.asarray(e.c if contrast is None else contrast, dtype=float))
    s = summarize(d)
    sigma = np.diag(d.N * s.variances / s.counts)
    T = C.T @ pseudo_inverse(SymMatrix(C @ C.T)).array @ C
    TS = T @ sigma
    tr = float(np.trace(TS))
    if tr == 0.0:
        return _degenerate("ATS", C @ s.means, df1=math.nan, df2=math.nan)
    stat = max(float(d.N * s.means @ T @ s.means) / tr, 0.0)
    f1 = tr * tr / float(np.trace(TS @ TS))
    lam = np.diag(1.0 / (s.counts - 1.0))
    DT = np.diag(np.diag(T))
    f2 = tr * tr / float(np.trace(DT @ DT @ sigma @ sigma @ lam))
    return TestResult(stat, f1, f2, f_sf(stat, f1, f2), "ATS")


def _degenerate(method, q, df1, df2) -> TestResult:
    if np.all(q == 0.0):
        return TestResult(0.0, df1, df2, 1.0, method, degenerate=False)
    return TestResult(math.inf, df1, df2, 0.0, method, degenerate=True)


def wald_statistic_batch(sums, sumsq_dev, n, contrast) -> np.ndarray:
    """Rank-one Wald statistic for a batch of resampled layouts.

    ``sums`` and ``sumsq_dev`` have shape (..., 4): per-cell totals and sums
    of squared deviations. Positive- and negative-weight cells are
    accumulated separately so that relabelling the two groups flips the sign
    of the contrast exactly in floating point.
    """
    n = np.asarray(n, dtype=float)
    c = np.asarray(contrast, dtype=float)
    means = sums / n
    scaled = c * c * (sumsq_dev / (n - 1.0)) / n
    pos = c > 0
    neg = c < 0
    num = (means[..., pos] * c[pos]).sum(axis=-1) - (means[..., neg] * -c[neg]).sum(axis=-1)
    den = scaled[..., pos].sum(axis=-1) + scaled[..., neg].sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = num * num / den
    stat = np.where(den > 0, stat, np.where(num == 0, 0.0, np.inf))
    return stat
