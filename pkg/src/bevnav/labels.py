"""Label vocabularies, label embeddings, and pixel-text similarity.

The per-cell similarity against the label vocabulary comes from plain dot
products with L2-normalized label embeddings; the pixel-label map is the
per-cell argmax with smallest-index tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Ordered label list. Index 0 is reserved: the floor/background label
    for category vocabularies, the "none" color for color vocabularies."""

    labels: tuple[str, ...]
    kind: str = "category"  # "category" | "color"

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise VocabularyError("vocabulary must not be empty")
        if len(set(self.labels)) != len(self.labels):
            raise VocabularyError("vocabulary labels must be unique")
        if self.kind not in ("category", "color"):
            raise VocabularyError(f"unknown vocabulary kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise VocabularyError(f"label {label!r} not in {self.kind} vocabulary") from None

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass
class LabelEmbeddings:
    vocab: Vocabulary
    matrix: np.ndarray  # (N, C), rows unit-normalized

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass
class PixelLabelMap:
    labels: np.ndarray  # (H, W) int
    similarity: np.ndarray | None = field(default=None, repr=False)


def load_label_embeddings(vocab: Vocabulary, rows: np.ndarray) -> LabelEmbeddings:
    """Validate and L2-normalize a label embedding matrix (one row per label)."""
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(vocab):
        raise VocabularyError(
            f"embedding matrix shape {matrix.shape} does not match "
            f"vocabulary of {len(vocab)} labels"
        )
    if not np.isfinite(matrix).all():
        raise VocabularyError("embedding matrix contains non-finite values")
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise VocabularyError(f"embedding row {zero[0]} ({vocab.labels[zero[0]]!r}) is all zeros")
    return LabelEmbeddings(vocab, matrix / norms[:, None])


def similarity(map_embedding: np.ndarray, emb: LabelEmbeddings) -> np.ndarray:
    """Per-cell dot products against the label rows -> (H, W, N) scores."""
    m = np.asarray(map_embedding, dtype=np.float64)
    if m.shape[-1] != emb.dim:
        raise VocabularyError(
            f"map embedding dim {m.shape[-1]} does not match label embedding dim {emb.dim}"
        )
    return m @ emb.matrix.T


def pixel_label_map(scores: np.ndarray) -> PixelLabelMap:
    """Per-cell argmax of the similarity scores; ties break to the
    smallest index, so all-zero (unobserved) rows map to index 0."""
    labels = np.argmax(scores, axis=-1).astype(np.int64)
    return PixelLabelMap(labels=labels, similarity=scores)
