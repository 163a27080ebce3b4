"""Frame fusion into the bird's-eye map stack.

A MapBundle carries the color reconstruction (lowest surface seen per
cell), the per-cell minimum height, the running-mean embedding map, and
observation counts. Heights only descend as frames integrate; pixels at
or above the robot's height are ignored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import (
    DEFAULT_MAX_DEPTH_M,
    CameraIntrinsics,
    GridSpec,
    Pose,
    project_points_to_grid,
)

log = logging.getLogger(__name__)

HEIGHT_SENTINEL = np.inf


class MappingError(ValueError):
    pass


@dataclass
class FrameInput:
    rgb: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) raw depth units
    pose: Pose
    embedding_pixels: np.ndarray  # (H, W, C)
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        h, w = self.depth.shape
        if self.rgb.shape[:2] != (h, w) or self.embedding_pixels.shape[:2] != (h, w):
            raise MappingError(
                f"frame planes disagree: rgb {self.rgb.shape}, depth {self.depth.shape}, "
                f"embeddings {self.embedding_pixels.shape}"
            )


@dataclass
class FrameStats:
    total_pixels: int = 0
    no_depth: int = 0
    above_height: int = 0
    out_of_bounds: int = 0
    used: int = 0


@dataclass
class MapBundle:
    grid: GridSpec
    bev_color: np.ndarray  # (H, W, 3) uint8
    height: np.ndarray  # (H, W) float64, HEIGHT_SENTINEL where unobserved
    embedding_sum: np.ndarray  # (H, W, C) float64 accumulator
    obs_count: np.ndarray  # (H, W) int64
    frame_stats: list[FrameStats] = field(default_factory=list)

    @property
    def embedding(self) -> np.ndarray:
        """Per-cell mean embedding; zero rows where unobserved."""
        counts = np.maximum(self.obs_count, 1)[..., None]
        return self.embedding_sum / counts

    @property
    def observed(self) -> np.ndarray:
        return self.obs_count > 0

    @property
    def embed_dim(self) -> int:
        return self.embedding_sum.shape[2]


def init_maps(grid: GridSpec, embed_dim: int) -> MapBundle:
    if embed_dim < 1:
        raise MappingError(f"embedding dimension must be >= 1, got {embed_dim}")
    shape = (grid.h_bar, grid.w_bar)
    return MapBundle(
        grid=grid,
        bev_color=np.zeros(shape + (3,), dtype=np.uint8),
        height=np.full(shape, HEIGHT_SENTINEL, dtype=np.float64),
        embedding_sum=np.zeros(shape + (embed_dim,), dtype=np.float64),
        obs_count=np.zeros(shape, dtype=np.int64),
    )


def integrate_frame(
    bundle: MapBundle, frame: FrameInput, max_depth_m: float = DEFAULT_MAX_DEPTH_M
) -> FrameStats:
    """Fuse one RGB-D frame into the bundle in place.

    Per valid pixel: back-project, transform to world, drop points at or
    above the robot height, project with the grid formula, then fold the
    embedding into the cell mean and apply the descending height/color
    update (strict less-than; ties keep the earlier color).
    """
    if frame.embedding_pixels.shape[2] != bundle.embed_dim:
        raise MappingError(
            f"embedding dimension mismatch: map has {bundle.embed_dim}, "
            f"frame has {frame.embedding_pixels.shape[2]}"
        )
    h, w = frame.depth.shape
    stats = FrameStats(total_pixels=h * w)
    intr = frame.intrinsics

    depth = frame.depth.astype(np.float64).ravel() * intr.depth_scale
    valid = (depth > 0) & (depth <= max_depth_m)
    stats.no_depth = int(np.count_nonzero(~valid))

    rows, cols = np.divmod(np.arange(h * w, dtype=np.int64)[valid], w)
    d = depth[valid]
    p_cam = np.stack(
        [(cols - intr.cx) * d / intr.fx, (rows - intr.cy) * d / intr.fy, d], axis=1
    )
    p_world = p_cam @ frame.pose.rotation.T + frame.pose.translation

    below = p_world[:, 1] < bundle.grid.robot_height_h
    stats.above_height = int(np.count_nonzero(~below))
    p_world = p_world[below]
    rows, cols = rows[below], cols[below]

    px, py, ok = project_points_to_grid(p_world, bundle.grid)
    stats.out_of_bounds = int(np.count_nonzero(~ok))
    px, py = px[ok], py[ok]
    heights = p_world[ok, 1]
    rows, cols = rows[ok], cols[ok]
    stats.used = px.size

    if px.size:
        flat = px * bundle.grid.w_bar + py
        embeds = frame.embedding_pixels.reshape(-1, bundle.embed_dim)[rows * w + cols]
        np.add.at(bundle.embedding_sum.reshape(-1, bundle.embed_dim), flat, embeds)
        np.add.at(bundle.obs_count.reshape(-1), flat, 1)

        # Per-cell winner: lowest height, earliest pixel on exact ties.
        order = np.lexsort((np.arange(flat.size), heights, flat))
        flat_sorted = flat[order]
        first = np.ones(flat_sorted.size, dtype=bool)
        first[1:] = flat_sorted[1:] != flat_sorted[:-1]
        win = order[first]
        win_cells = flat[win]
        lower = heights[win] < bundle.height.reshape(-1)[win_cells]
        win = win[lower]
        win_cells = win_cells[lower]
        bundle.height.reshape(-1)[win_cells] = heights[win]
        bundle.bev_color.reshape(-1, 3)[win_cells] = frame.rgb.reshape(-1, 3)[
            rows[win] * w + cols[win]
        ]

    bundle.frame_stats.append(stats)
    log.info(
        "frame integrated: used=%d no_depth=%d above_height=%d out_of_bounds=%d",
        stats.used, stats.no_depth, stats.above_height, stats.out_of_bounds,
    )
    return stats


def obstacle_grid(
    bundle: MapBundle,
    floor_labels: set[int],
    pixel_labels: np.ndarray,
    inflation_radius_m: float = 0.15,
) -> np.ndarray:
    """Boolean occupancy: True where not traversable.

    Observed non-floor cells are obstacles, dilated by a Chebyshev radius
    of ceil(inflation / cell size); unobserved cells stay non-traversable.
    """
    labels = np.asarray(pixel_labels)
    if labels.shape != bundle.height.shape:
        raise MappingError(
            f"pixel label dimensions {labels.shape} do not match grid {bundle.height.shape}"
        )
    observed = bundle.observed
    is_floor = np.isin(labels, sorted(floor_labels))
    obstacles = observed & ~is_floor
    radius = int(np.ceil(inflation_radius_m / bundle.grid.cell_size_s))
    if radius > 0 and obstacles.any():
        size = 2 * radius + 1
        obstacles = ndimage.binary_dilation(obstacles, structure=np.ones((size, size), bool))
    return obstacles | ~observed
