"""Two-dimensional PCA projection of embedding spaces for landscape plots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaResult:
    mean: np.ndarray  # D
    components: np.ndarray  # n_components x D
    explained_variance: np.ndarray  # n_components
    explained_variance_ratio: np.ndarray  # n_components

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) @ self.components.T


def fit_pca(x: np.ndarray, n_components: int = 2) -> PcaResult:
    """Mean-centered SVD projection with a deterministic sign convention.

    Each component's largest-magnitude loading is made positive so the
    projection is reproducible across runs and BLAS builds.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if d < n_components:
        raise ValueError(f"D={d} < n_components={n_components}")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:n_components]
    for i in range(n_components):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    var = (s[:n_components] ** 2) / n
    total = float((centered * centered).sum()) / n
    ratio = var / total if total > 0 else np.zeros_like(var)
    return PcaResult(
        mean=mean,
        components=comps,
        explained_variance=var,
        explained_variance_ratio=ratio,
    )
