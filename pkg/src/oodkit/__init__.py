"""Backbone-agnostic OOD detection toolkit for pre-extracted embeddings."""

from .embed_store import (
    ClassPartition,
    EmbeddingSet,
    FormatError,
    load_embeddings,
    save_embeddings,
    split_by_label,
)
from .maha import GaussianModel, fit_gaussian, maha_per_class, score_maha
from .metrics import ScoreSet, auprc, auroc, fpr_at_tpr, roc_points
from .oe_head import OeConfig, OeHead, oversampling_factor, score_oe, train_oe_head
from .probs import LogitSet, score_in_mass, score_msp, softmax
from .zshot import CandidateLabels, score_zshot, similarity_logits

__all__ = [
    "ClassPartition",
    "EmbeddingSet",
    "FormatError",
    "GaussianModel",
    "LogitSet",
    "OeConfig",
    "OeHead",
    "CandidateLabels",
    "ScoreSet",
    "auprc",
    "auroc",
    "fit_gaussian",
    "fpr_at_tpr",
    "load_embeddings",
    "maha_per_class",
    "oversampling_factor",
    "roc_points",
    "save_embeddings",
    "score_in_mass",
    "score_maha",
    "score_msp",
    "score_oe",
    "score_zshot",
    "similarity_logits",
    "softmax",
    "split_by_label",
    "train_oe_head",
]
