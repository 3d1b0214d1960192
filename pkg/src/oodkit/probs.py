"""Softmax-derived confidence scores: MSP and in-distribution probability mass."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LogitSet:
    """N x C logits with the subset of columns that are in-distribution classes."""

    logits: np.ndarray
    class_ids: list[int] | None = None
    in_indices: tuple[int, ...] = ()

    def __post_init__(self):
        logits = np.ascontiguousarray(self.logits, dtype=np.float64)
        if logits.ndim != 2:
            raise ValueError(f"logits must be 2-D, got shape {logits.shape}")
        if not np.isfinite(logits).all():
            raise ValueError("non-finite logit")
        c = logits.shape[1]
        idx = tuple(sorted(set(int(i) for i in self.in_indices)))
        if any(i < 0 or i >= c for i in idx):
            raise ValueError(f"in_indices {idx} out of range for C={c}")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "in_indices", idx)

    @property
    def n_classes(self) -> int:
        return self.logits.shape[1]


def softmax(rows: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction; accepts a single row or a matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(rows).all():
        raise ValueError("non-finite input to softmax")
    shifted = rows - rows.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def score_msp(ls: LogitSet, presoftmaxed: bool = False) -> np.ndarray:
    """Maximum softmax probability over all C classes, one score per row."""
    p = ls.logits if presoftmaxed else softmax(ls.logits)
    return p.max(axis=1)


def score_in_mass(ls: LogitSet, presoftmaxed: bool = False) -> np.ndarray:
    """Sum of softmax probabilities over the in-distribution columns (p(in|x))."""
    if not ls.in_indices:
        raise ValueError("in_indices is empty")
    p = ls.logits if presoftmaxed else softmax(ls.logits)
    return p[:, list(ls.in_indices)].sum(axis=1)
