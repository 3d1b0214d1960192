"""Class-conditional Gaussian with shared covariance and Mahalanobis scoring.

The model stores per-class means and the lower Cholesky factor of the
(optionally ridge-regularized) shared covariance. All scoring goes
through triangular solves; the covariance is never inverted explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .embed_store import EmbeddingSet, read_container, split_by_label, write_container

GAUSSIAN_MAGIC = b"OODGAU01"

# Ridge defaults, relative to trace(Sigma)/D so behavior is unit-free.
EPS_BASE = 1e-6
EPS_CAP = 1e-2
EPS_FLOOR = 1e-12  # absolute fallback when trace(Sigma) == 0


class CovarianceError(ArithmeticError):
    """Shared covariance could not be factorized even at the ridge cap."""


@dataclass(frozen=True)
class GaussianModel:
    """Per-class means plus one shared covariance, held as its Cholesky factor."""

    means: np.ndarray  # K x D
    chol: np.ndarray  # D x D lower triangular, L @ L.T = Sigma + eps*I
    epsilon: float
    class_ids: list[int]
    counts: list[int]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]


def fit_gaussian(train: EmbeddingSet, epsilon: float | None = None) -> GaussianModel:
    """Fit per-class means and the 1/N-normalized shared covariance.

    epsilon=None picks a relative default ridge; an explicit value
    (including 0) is tried first and escalated x10 on Cholesky failure
    up to a relative cap, after which CovarianceError is raised.
    """
    if train.labels is None:
        raise ValueError("fit_gaussian requires labels")
    if train.n < 2:
        raise ValueError(f"need at least 2 samples, got {train.n}")
    groups = split_by_label(train)
    class_ids = sorted(groups)
    data = train.data.astype(np.float64)
    d = train.dim
    means = np.empty((len(class_ids), d))
    cov = np.zeros((d, d))
    counts = []
    for k, cid in enumerate(class_ids):
        rows = data[groups[cid]]
        counts.append(rows.shape[0])
        means[k] = rows.mean(axis=0)
        centered = rows - means[k]
        cov += centered.T @ centered
    cov /= train.n

    scale = np.trace(cov) / d
    if scale <= 0.0:
        scale = EPS_FLOOR / EPS_BASE
    cap = EPS_CAP * scale
    eps = EPS_BASE * scale if epsilon is None else float(epsilon)
    while True:
        try:
            chol = np.linalg.cholesky(cov + eps * np.eye(d))
            break
        except np.linalg.LinAlgError:
            nxt = EPS_BASE * scale if eps == 0.0 else eps * 10.0
            if nxt > cap:
                raise CovarianceError(
                    f"covariance not factorizable at ridge cap {cap:g}"
                ) from None
            eps = nxt
    return GaussianModel(
        means=means, chol=chol, epsilon=eps, class_ids=class_ids, counts=counts
    )


def maha_per_class(model: GaussianModel, query: EmbeddingSet) -> np.ndarray:
    """N x K matrix of half squared Mahalanobis distances to each class mean."""
    if query.dim != model.dim:
        raise ValueError(f"query dim {query.dim} != model dim {model.dim}")
    data = query.data.astype(np.float64)
    out = np.empty((query.n, model.n_classes))
    for k in range(model.n_classes):
        centered = data - model.means[k]
        # L y = (x - mu); half squared distance is ||y||^2 / 2
        y = scipy.linalg.solve_triangular(model.chol, centered.T, lower=True)
        out[:, k] = 0.5 * np.einsum("ij,ij->j", y, y)
    return out


def score_maha(model: GaussianModel, query: EmbeddingSet) -> np.ndarray:
    """Confidence score: negated minimum over classes of the half squared distance."""
    return -maha_per_class(model, query).min(axis=1)


def save_gaussian(model: GaussianModel, path) -> None:
    header = {
        "kind": "gaussian",
        "k": model.n_classes,
        "d": model.dim,
        "epsilon": model.epsilon,
        "class_ids": model.class_ids,
        "counts": model.counts,
    }
    payload = model.means.astype("<f8").tobytes() + model.chol.astype("<f8").tobytes()
    write_container(path, GAUSSIAN_MAGIC, header, payload)


def load_gaussian(path) -> GaussianModel:
    header, payload = read_container(path, GAUSSIAN_MAGIC)
    k, d = int(header["k"]), int(header["d"])
    means = np.frombuffer(payload[: k * d * 8], dtype="<f8").reshape(k, d).copy()
    chol = np.frombuffer(payload[k * d * 8 :], dtype="<f8").reshape(d, d).copy()
    return GaussianModel(
        means=means,
        chol=chol,
        epsilon=float(header["epsilon"]),
        class_ids=[int(c) for c in header["class_ids"]],
        counts=[int(c) for c in header["counts"]],
    )
