"""Threshold-free OOD evaluation: AUROC, AUPRC, FPR at N% TPR, curve export.

Convention: the OOD test set is the positive class and the detection
statistic is the negated confidence score, so low confidence means OOD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScoreSet:
    """Paired confidence scores for in-distribution and OOD test samples."""

    in_scores: np.ndarray
    out_scores: np.ndarray

    def __post_init__(self):
        ins = np.asarray(self.in_scores, dtype=np.float64).ravel()
        outs = np.asarray(self.out_scores, dtype=np.float64).ravel()
        if ins.size == 0 or outs.size == 0:
            raise ValueError("both in_scores and out_scores must be non-empty")
        if not (np.isfinite(ins).all() and np.isfinite(outs).all()):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "in_scores", ins)
        object.__setattr__(self, "out_scores", outs)


def _midranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the group midrank."""
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    n = x.size
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(s: ScoreSet) -> float:
    """Mann-Whitney AUROC: P(det_out > det_in) + half the tie probability."""
    det_out = -s.out_scores
    det_in = -s.in_scores
    m, n = det_out.size, det_in.size
    ranks = _midranks(np.concatenate([det_out, det_in]))
    u = ranks[:m].sum() - m * (m + 1) / 2.0
    return float(u / (m * n))


def _sweep(s: ScoreSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative (tp, fp, thresholds) at tie-group ends of descending detection."""
    det = np.concatenate([-s.out_scores, -s.in_scores])
    is_pos = np.concatenate(
        [np.ones(s.out_scores.size, bool), np.zeros(s.in_scores.size, bool)]
    )
    order = np.argsort(-det, kind="mergesort")
    det = det[order]
    is_pos = is_pos[order]
    # last index of each tie group
    ends = np.flatnonzero(np.diff(det) != 0.0)
    ends = np.append(ends, det.size - 1)
    tp = np.cumsum(is_pos)[ends].astype(np.float64)
    fp = np.cumsum(~is_pos)[ends].astype(np.float64)
    return tp, fp, det[ends]


def auprc(s: ScoreSet) -> float:
    """Area under the PR curve (step / average-precision interpolation)."""
    tp, fp, _ = _sweep(s)
    m = s.out_scores.size
    recall = tp / m
    precision = tp / (tp + fp)
    prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev) * precision))


def fpr_at_tpr(s: ScoreSet, n_percent: float = 95.0) -> float:
    """Smallest FPR among tie-group thresholds whose TPR >= n_percent/100."""
    if not 0.0 < n_percent <= 100.0:
        raise ValueError(f"n_percent must be in (0, 100], got {n_percent}")
    tp, fp, _ = _sweep(s)
    tpr = tp / s.out_scores.size
    fpr = fp / s.in_scores.size
    ok = tpr >= n_percent / 100.0
    return float(fpr[ok].min())


def roc_points(s: ScoreSet) -> list[tuple[float, float]]:
    """(fpr, tpr) at each tie group plus the (0,0) and (1,1) endpoints."""
    tp, fp, _ = _sweep(s)
    tpr = tp / s.out_scores.size
    fpr = fp / s.in_scores.size
    pts = [(0.0, 0.0)]
    for x, y in zip(fpr, tpr):
        pts.append((float(x), float(y)))
    if pts[-1] != (1.0, 1.0):
        pts.append((1.0, 1.0))
    return pts


def pr_points(s: ScoreSet) -> list[tuple[float, float]]:
    """(recall, precision) at each tie group of the descending-detection sweep."""
    tp, fp, _ = _sweep(s)
    recall = tp / s.out_scores.size
    precision = tp / (tp + fp)
    return [(float(r), float(p)) for r, p in zip(recall, precision)]
