"""Statistics over samples of cubes sharing one design.

The coordinates of a sample form an ordinary ``n x (D-1)`` real matrix, so
standard multivariate tools apply directly. This module provides column
means and SDs, percentile bootstrap intervals for the means, and classical
PCA (covariance eigendecomposition).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from compcube.coordinates import ContrastMatrix, CoordinateKey, coords, resolve_groups
from compcube.cube import CubeError, KCube
from compcube.sbp import FactorSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoordinateMatrix:
    """Coordinates of a sample, one row per observation."""

    values: np.ndarray
    keys: tuple[CoordinateKey, ...]
    factors: tuple[FactorSpec, ...]
    ids: tuple[str | None, ...]
    normalized: bool = True

    @property
    def labels(self) -> list[str]:
        return [k.label(self.factors) for k in self.keys]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def select(self, groups) -> "CoordinateMatrix":
        """Columns of the chosen coordinate groups (see ``resolve_groups``).

        ``groups`` is one selector or a list of them; column order is kept.
        """
        if isinstance(groups, str):
            groups = [groups]
        wanted = set()
        for g in groups:
            wanted.update(resolve_groups(self.factors, g))
        cols = [i for i, k in enumerate(self.keys) if k.axes in wanted]
        return CoordinateMatrix(self.values[:, cols], tuple(self.keys[i] for i in cols),
                                self.factors, self.ids, self.normalized)


def coordinate_matrix(sample: Sequence[KCube], V: ContrastMatrix,
                      normalized: bool = True) -> CoordinateMatrix:
    sample = list(sample)
    if not sample:
        raise CubeError("empty sample")
    first = sample[0]
    for i, cube in enumerate(sample[1:], start=2):
        if not cube.same_design(first):
            raise CubeError(f"observation {cube.obs_id or i} does not share the sample's design")
    rows = np.vstack([coords(c, V, normalized).values for c in sample])
    return CoordinateMatrix(rows, V.keys, V.factors, tuple(c.obs_id for c in sample), normalized)


def _values(matrix) -> np.ndarray:
    arr = matrix.values if isinstance(matrix, CoordinateMatrix) else np.asarray(matrix, float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def mean_sd(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Column means and sample standard deviations (``n - 1`` denominator)."""
    arr = _values(matrix)
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 observations for an SD, got {arr.shape[0]}")
    return arr.mean(axis=0), arr.std(axis=0, ddof=1)


def nearest_rank(sorted_values: np.ndarray, prob: float) -> np.ndarray:
    """Smallest order statistic whose empirical CDF reaches ``prob``."""
    n = sorted_values.shape[0]
    # round away float noise such as 0.975 * 1000 = 975.0000000000001
    rank = math.ceil(round(prob * n, 9))
    return sorted_values[min(max(rank, 1), n) - 1]


@dataclass(frozen=True, eq=False)
class BootstrapCI:
    labels: list[str]
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    B: int
    alpha: float
    seed: int


def resample_means(values: np.ndarray, B: int, seed: int, workers: int = 1) -> np.ndarray:
    """Column means of ``B`` row resamples, shape ``(B, m)``.

    Resample ``b`` draws from its own stream spawned off ``seed``, so the
    result does not depend on ``workers``.
    """
    n = values.shape[0]
    streams = np.random.SeedSequence(seed).spawn(B)

    def one(b):
        idx = np.random.default_rng(streams[b]).integers(0, n, size=n)
        return values[idx].mean(axis=0)

    out = np.empty((B, values.shape[1]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for b, row in enumerate(pool.map(one, range(B))):
                out[b] = row
    else:
        for b in range(B):
            out[b] = one(b)
    return out


def bootstrap_ci(matrix, B: int = 1000, alpha: float = 0.05, seed: int = 0,
                 workers: int = 1) -> BootstrapCI:
    """Percentile bootstrap intervals for the column means.

    Whole observations (rows) are resampled with replacement; bounds are the
    nearest-rank ``alpha/2`` and ``1 - alpha/2`` quantiles of the resampled
    means.
    """
    if int(B) != B or B < 100:
        raise ValueError(f"B must be an integer >= 100, got {B!r}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    arr = _values(matrix)
    mean, sd = mean_sd(arr)
    boot = np.sort(resample_means(arr, int(B), seed, workers), axis=0)
    labels = (matrix.labels if isinstance(matrix, CoordinateMatrix)
              else [str(i + 1) for i in range(arr.shape[1])])
    return BootstrapCI(labels, mean, sd, nearest_rank(boot, alpha / 2),
                       nearest_rank(boot, 1 - alpha / 2), int(B), float(alpha), seed)


@dataclass(frozen=True, eq=False)
class PcaResult:
    """Classical PCA of a coordinate matrix.

    ``loadings`` is ``(p, p)`` with components in columns, ``scores`` is
    ``(n, p)``. ``degenerate`` flags input without any variance, in which
    case ``explained`` is all zeros.
    """

    labels: list[str]
    ids: tuple
    center: np.ndarray
    eigenvalues: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    explained: np.ndarray
    degenerate: bool = False

    @property
    def covariance(self) -> np.ndarray:
        return self.loadings @ np.diag(self.eigenvalues) @ self.loadings.T


def pca(matrix, groups=None) -> PcaResult:
    """Eigendecomposition of the sample covariance of the (selected) columns.

    Components come in decreasing eigenvalue order; each loading vector is
    signed so its largest-magnitude entry is positive.
    """
    if groups is not None:
        if not isinstance(matrix, CoordinateMatrix):
            raise TypeError("group selection needs a CoordinateMatrix")
        matrix = matrix.select(groups)
    arr = _values(matrix)
    n, p = arr.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 observations, got {n}")
    if p < 1:
        raise ValueError("no columns selected")
    center = arr.mean(axis=0)
    centered = arr - center
    cov = centered.T @ centered / (n - 1)
    eigvals, vecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    vecs = vecs[:, order]
    for j in range(p):
        col = vecs[:, j]
        lead = np.flatnonzero(np.isclose(np.abs(col), np.abs(col).max(), rtol=1e-9, atol=0))[0]
        if col[lead] < 0:
            vecs[:, j] = -col
    total = eigvals.sum()
    degenerate = not total > 0
    if degenerate:
        log.warning("PCA input has zero total variance")
        explained = np.zeros(p)
    else:
        explained = eigvals / total
    if isinstance(matrix, CoordinateMatrix):
        labels, ids = matrix.labels, matrix.ids
    else:
        labels, ids = [str(i + 1) for i in range(p)], tuple(range(1, n + 1))
    return PcaResult(labels, ids, center, eigvals, vecs, centered @ vecs, explained, degenerate)
