"""Zero-shot OOD scoring from image embeddings and candidate-label text embeddings.

Logit i is the dot product of the image embedding with candidate text
embedding i; softmax over the concatenated in/out candidates then gives
p(in|x) as the confidence score. By default both sides are L2-normalized
and the similarities divided by a temperature, matching how image-text
encoders are conventionally used; raw dot products are available too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed_store import EmbeddingSet
from .probs import LogitSet, score_in_mass, score_msp

DEFAULT_TEMPERATURE = 0.01


@dataclass(frozen=True)
class CandidateLabels:
    """Two groups of candidate-label text embeddings: in-distribution and outlier."""

    in_text: np.ndarray  # K x E
    in_names: list[str]
    out_text: np.ndarray | None = None  # O x E, None for the baseline
    out_names: list[str] | None = None
    normalize: bool = True
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        in_text = np.ascontiguousarray(self.in_text, dtype=np.float64)
        if in_text.ndim != 2 or in_text.shape[0] < 1:
            raise ValueError(f"in_text must be K x E with K >= 1, got {in_text.shape}")
        if len(self.in_names) != in_text.shape[0]:
            raise ValueError("in_names length must match in_text rows")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.normalize:
            in_text = _unit_rows(in_text, "in_text")
        object.__setattr__(self, "in_text", in_text)
        if self.out_text is not None:
            out_text = np.ascontiguousarray(self.out_text, dtype=np.float64)
            if out_text.ndim != 2 or out_text.shape[1] != in_text.shape[1]:
                raise ValueError("out_text must match in_text embedding dimension")
            if self.out_names is not None and len(self.out_names) != out_text.shape[0]:
                raise ValueError("out_names length must match out_text rows")
            if self.normalize:
                out_text = _unit_rows(out_text, "out_text")
            object.__setattr__(self, "out_text", out_text)

    @property
    def k_in(self) -> int:
        return self.in_text.shape[0]

    @property
    def o_out(self) -> int:
        return 0 if self.out_text is None else self.out_text.shape[0]


def _unit_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if (norms == 0.0).any():
        row = int(np.argmin(norms))
        raise ValueError(f"zero-norm row {row} in {what} under normalization")
    return x / norms


def similarity_logits(images: EmbeddingSet, labels: CandidateLabels) -> LogitSet:
    """Image-candidate dot products as logits; in-group columns come first."""
    if images.dim != labels.in_text.shape[1]:
        raise ValueError(
            f"image dim {images.dim} != text embedding dim {labels.in_text.shape[1]}"
        )
    imgs = images.data.astype(np.float64)
    if labels.normalize:
        imgs = _unit_rows(imgs, "images")
    cands = labels.in_text
    if labels.out_text is not None:
        cands = np.concatenate([labels.in_text, labels.out_text])
    logits = imgs @ cands.T
    if labels.normalize:
        logits = logits / labels.temperature
    return LogitSet(logits=logits, in_indices=tuple(range(labels.k_in)))


def score_zshot(images: EmbeddingSet, labels: CandidateLabels) -> np.ndarray:
    """p(in|x) over in+out candidates; MSP over in-candidates when out is absent."""
    ls = similarity_logits(images, labels)
    if labels.o_out == 0:
        return score_msp(ls)
    return score_in_mass(ls)
