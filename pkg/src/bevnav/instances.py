"""Instance fusion: assign category/color labels to segmentation masks and
assemble the instance-aware map.

Each mask is labeled by region matching (restrict the pixel-label map to
the mask footprint), counting the surviving label ids, and ranking them by
their count ratio within the region; the top-ranked label wins unless its
ratio falls below the reject threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .labels import PixelLabelMap, Vocabulary
from .mapping import MapBundle

REJECT_THRESHOLD = 0.3
UNKNOWN_LABEL = "unknown"


class InstanceError(ValueError):
    pass


@dataclass
class MaskSet:
    masks: list[np.ndarray]  # each (H, W) bool, non-empty
    provenance: str = "surrogate-segmenter"  # or "external-file"
    predicted_ious: list[float] | None = None
    stability_scores: list[float] | None = None

    def __post_init__(self):
        for i, m in enumerate(self.masks):
            if not m.any():
                raise InstanceError(f"mask {i} is empty")


@dataclass
class MaskRecord:
    segmentation: np.ndarray  # (H, W) bool
    area: int
    bbox: tuple[int, int, int, int]  # (x, y, w, h); x is the column
    predicted_iou: float
    stability_score: float
    label: str
    label_id: int
    num_of_same_class: int
    color: str
    score: float
    point_coords: list[list[float]] = field(default_factory=list)
    crop_box: tuple[int, int, int, int] | None = None

    @property
    def centroid(self) -> tuple[float, float]:
        rows, cols = np.nonzero(self.segmentation)
        return float(rows.mean()), float(cols.mean())

    @property
    def queryable(self) -> bool:
        return self.label != UNKNOWN_LABEL


@dataclass
class InstanceMap:
    """The queryable artifact: embedding map plus instance/color id grids
    and the per-mask attribute records."""

    bundle: MapBundle
    instance_ids: np.ndarray  # (H, W) int, 0 = none
    color_ids: np.ndarray  # (H, W) int, 0 = none
    records: list[MaskRecord]
    category_vocab: Vocabulary
    color_vocab: Vocabulary
    pixel_labels: PixelLabelMap
    color_pixel_labels: PixelLabelMap

    @property
    def vlmap(self) -> np.ndarray:
        return self.bundle.embedding

    def record_by_id(self, label_id: int) -> MaskRecord:
        for r in self.records:
            if r.label_id == label_id:
                return r
        raise InstanceError(f"no record with label_id {label_id}")


def surrogate_segment(pixel_labels: PixelLabelMap, min_area: int = 4) -> MaskSet:
    """Connected-component stand-in for a promptable segmenter.

    Median-smooths the label raster (3x3), then takes 4-connected
    components of each non-floor label value with area >= min_area.
    """
    smoothed = ndimage.median_filter(pixel_labels.labels, size=3, mode="nearest")
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)
    masks = []
    for value in np.unique(smoothed):
        if value == 0:  # reserved floor/background index
            continue
        comp, n = ndimage.label(smoothed == value, structure=structure)
        for k in range(1, n + 1):
            mask = comp == k
            if int(mask.sum()) >= min_area:
                masks.append(mask)
    return MaskSet(masks=masks, provenance="surrogate-segmenter")


def region_match(pixel_labels: PixelLabelMap, mask: np.ndarray) -> np.ndarray:
    """Keep labels inside the mask footprint, zero (background) elsewhere."""
    labels = pixel_labels.labels
    if mask.shape != labels.shape:
        raise InstanceError(f"mask shape {mask.shape} does not match labels {labels.shape}")
    if not mask.any():
        raise InstanceError("region_match called with an empty mask")
    return np.where(mask, labels, 0)


def unique_counts(matched: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Label ids and occurrence counts inside the mask, background excluded."""
    if not mask.any():
        raise InstanceError("unique_counts called with an empty mask")
    values, counts = np.unique(matched[mask], return_counts=True)
    keep = values != 0
    return values[keep], counts[keep]


def score_labels(label_ids: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Count-ratio scores sorted descending; ties by label index ascending."""
    label_ids = np.asarray(label_ids)
    counts = np.asarray(counts, dtype=np.float64)
    if label_ids.size == 0:
        raise InstanceError("score_labels called with no labels")
    total = counts.sum()
    if total <= 0:
        raise InstanceError("score_labels called with zero total count")
    scores = counts / total
    order = np.lexsort((label_ids, -scores))
    return label_ids[order], scores[order]


def assign_label(
    mask: np.ndarray,
    pixel_labels: PixelLabelMap,
    vocab: Vocabulary,
    reject_threshold: float = REJECT_THRESHOLD,
) -> tuple[str, float]:
    """Top-ranked label string for a mask, or "unknown" when the region is
    all background or the winning ratio falls below the reject threshold."""
    matched = region_match(pixel_labels, mask)
    ids, counts = unique_counts(matched, mask)
    if ids.size == 0:
        return UNKNOWN_LABEL, 0.0
    ids, scores = score_labels(ids, counts)
    top_id, top_score = int(ids[0]), float(scores[0])
    if top_score < reject_threshold:
        return UNKNOWN_LABEL, top_score
    return vocab.labels[top_id], top_score


def assign_color(
    mask: np.ndarray,
    color_pixel_labels: PixelLabelMap,
    color_vocab: Vocabulary,
    reject_threshold: float = REJECT_THRESHOLD,
) -> tuple[str, float]:
    """Same ranking pipeline run against the color-vocabulary label map."""
    return assign_label(mask, color_pixel_labels, color_vocab, reject_threshold)


def _tight_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    rows, cols = np.nonzero(mask)
    return (
        int(cols.min()),
        int(rows.min()),
        int(cols.max() - cols.min() + 1),
        int(rows.max() - rows.min() + 1),
    )


def build_instance_map(
    bundle: MapBundle,
    masks: MaskSet,
    pixel_labels: PixelLabelMap,
    color_pixel_labels: PixelLabelMap,
    category_vocab: Vocabulary,
    color_vocab: Vocabulary,
    reject_threshold: float = REJECT_THRESHOLD,
) -> InstanceMap:
    """Label every mask, assign unique instance ids, and paint the
    instance/color grids. Overlaps resolve smaller-area-on-top."""
    shape = pixel_labels.labels.shape
    records: list[MaskRecord] = []
    for i, mask in enumerate(masks.masks):
        label, score = assign_label(mask, pixel_labels, category_vocab, reject_threshold)
        color, _ = assign_color(mask, color_pixel_labels, color_vocab, reject_threshold)
        if color == UNKNOWN_LABEL:
            color = color_vocab.labels[0]
        iou = masks.predicted_ious[i] if masks.predicted_ious else 1.0
        stab = masks.stability_scores[i] if masks.stability_scores else 1.0
        records.append(
            MaskRecord(
                segmentation=mask,
                area=int(mask.sum()),
                bbox=_tight_bbox(mask),
                predicted_iou=float(iou),
                stability_score=float(stab),
                label=label,
                label_id=i + 1,
                num_of_same_class=0,
                color=color,
                score=score,
            )
        )

    by_label: dict[str, int] = {}
    for r in records:
        by_label[r.label] = by_label.get(r.label, 0) + 1
    for r in records:
        r.num_of_same_class = by_label[r.label]

    instance_ids = np.zeros(shape, dtype=np.int64)
    color_ids = np.zeros(shape, dtype=np.int64)
    # Larger masks first so smaller (more specific) masks end up on top.
    paint_order = sorted(range(len(records)), key=lambda i: (-records[i].area, i))
    for i in paint_order:
        r = records[i]
        instance_ids[r.segmentation] = r.label_id
        color_ids[r.segmentation] = color_vocab.index(r.color)

    return InstanceMap(
        bundle=bundle,
        instance_ids=instance_ids,
        color_ids=color_ids,
        records=records,
        category_vocab=category_vocab,
        color_vocab=color_vocab,
        pixel_labels=pixel_labels,
        color_pixel_labels=color_pixel_labels,
    )
