"""Two-step instance localization over a built InstanceMap.

Coarse step: pick the matching mask record by name/color with either a
nearest or a left-to-right ordering. Fine step: goal cell from the
centroid of the mask cells whose pixel label agrees with the record's
label, snapped into the mask; the approach cell is the nearest traversable
cell to that goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instances import InstanceMap, MaskRecord

ORDER_NEAREST = "nearest"
ORDER_LEFT_TO_RIGHT = "left_to_right"

APPROACH_SEARCH_M = 2.0


class LocalizationError(LookupError):
    pass


@dataclass(frozen=True)
class ObjAttr:
    name: str
    instance_idx: int = 0  # 0 = unspecified/nearest; 1-based otherwise
    color: str | None = None

    def __post_init__(self):
        if self.instance_idx < 0:
            raise ValueError(f"instance_idx must be >= 0, got {self.instance_idx}")


@dataclass
class InstanceRef:
    record: MaskRecord
    goal_cell: tuple[int, int]
    approach_cell: tuple[int, int] | None = None


def resolve(
    attr: ObjAttr,
    imap: InstanceMap,
    agent_pos: tuple[int, int],
    ordering: str = ORDER_NEAREST,
) -> MaskRecord:
    """Coarse lookup: filter records by name (and color if given), order
    them, and pick the requested ordinal."""
    if ordering not in (ORDER_NEAREST, ORDER_LEFT_TO_RIGHT):
        raise ValueError(f"unknown ordering {ordering!r}")
    candidates = [
        r
        for r in imap.records
        if r.queryable
        and r.label == attr.name
        and (attr.color is None or r.color == attr.color)
    ]
    if not candidates:
        what = f"{attr.color} {attr.name}" if attr.color else attr.name
        raise LocalizationError(f"no instance found for {what!r}")

    if attr.instance_idx == 0 or ordering == ORDER_NEAREST:
        key = lambda r: (
            math.hypot(r.centroid[0] - agent_pos[0], r.centroid[1] - agent_pos[1]),
            r.label_id,
        )
    else:
        key = lambda r: (r.centroid[1], r.label_id)
    candidates.sort(key=key)

    idx = attr.instance_idx - 1 if attr.instance_idx >= 1 else 0
    if idx >= len(candidates):
        raise LocalizationError(
            f"instance index {attr.instance_idx} out of range: "
            f"only {len(candidates)} matching instance(s)"
        )
    return candidates[idx]


def fine_position(record: MaskRecord, imap: InstanceMap) -> tuple[int, int]:
    """Goal cell inside the mask: centroid of the label-consistent subset,
    falling back to the full mask, snapped to the nearest in-mask cell."""
    mask = record.segmentation
    if record.queryable:
        label_idx = imap.category_vocab.index(record.label)
        subset = mask & (imap.pixel_labels.labels == label_idx)
    else:
        subset = mask
    if not subset.any():
        subset = mask
    rows, cols = np.nonzero(subset)
    cr, cc = rows.mean(), cols.mean()

    mrows, mcols = np.nonzero(mask)
    d2 = (mrows - cr) ** 2 + (mcols - cc) ** 2
    best = int(np.lexsort((mcols, mrows, d2))[0])
    return int(mrows[best]), int(mcols[best])


def approach_cell(
    goal: tuple[int, int],
    occupancy: np.ndarray,
    cell_size_s: float,
    max_search_m: float = APPROACH_SEARCH_M,
) -> tuple[int, int]:
    """Nearest traversable cell to the goal by Euclidean distance,
    limited to max_search_m; ties break row-major."""
    gr, gc = goal
    if not occupancy[gr, gc]:
        return goal
    h, w = occupancy.shape
    radius = int(math.ceil(max_search_m / cell_size_s))
    r0, r1 = max(0, gr - radius), min(h, gr + radius + 1)
    c0, c1 = max(0, gc - radius), min(w, gc + radius + 1)
    window = ~occupancy[r0:r1, c0:c1]
    rows, cols = np.nonzero(window)
    if rows.size == 0:
        raise LocalizationError(f"no traversable cell within {max_search_m} m of {goal}")
    rows, cols = rows + r0, cols + c0
    dist = np.hypot(rows - gr, cols - gc)
    in_range = dist * cell_size_s <= max_search_m
    if not in_range.any():
        raise LocalizationError(f"no traversable cell within {max_search_m} m of {goal}")
    rows, cols, dist = rows[in_range], cols[in_range], dist[in_range]
    best = int(np.lexsort((cols, rows, dist))[0])
    return int(rows[best]), int(cols[best])


def locate(
    attr: ObjAttr,
    imap: InstanceMap,
    agent_pos: tuple[int, int],
    occupancy: np.ndarray | None = None,
    ordering: str = ORDER_NEAREST,
) -> InstanceRef:
    """Full coarse-then-fine lookup; fills the approach cell when an
    occupancy grid is supplied."""
    record = resolve(attr, imap, agent_pos, ordering)
    goal = fine_position(record, imap)
    approach = None
    if occupancy is not None:
        approach = approach_cell(goal, occupancy, imap.bundle.grid.cell_size_s)
    return InstanceRef(record=record, goal_cell=goal, approach_cell=approach)
