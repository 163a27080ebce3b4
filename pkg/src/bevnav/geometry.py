"""Camera back-projection, world transforms, and top-down grid projection.

Conventions: world y is up (height); the map plane is spanned by world x
and z. Grid cells are addressed as (px, py) with px the row index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_DEPTH_M = 10.0


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float = 1.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.depth_scale <= 0:
            raise GeometryError(f"depth_scale must be positive, got {self.depth_scale}")


@dataclass(frozen=True)
class Pose:
    """World-from-camera transform: p_world = rotation @ p_cam + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise GeometryError("pose rotation is not orthonormal (tolerance 1e-6)")
        if not math.isclose(float(np.linalg.det(rot)), 1.0, abs_tol=1e-6):
            raise GeometryError("pose rotation determinant is not +1")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class GridSpec:
    h_bar: int
    w_bar: int
    cell_size_s: float = 0.05
    robot_height_h: float = 1.5

    def __post_init__(self):
        if self.h_bar < 1 or self.w_bar < 1:
            raise GeometryError(f"grid must be at least 1x1, got {self.h_bar}x{self.w_bar}")
        if self.cell_size_s <= 0:
            raise GeometryError(f"cell size must be positive, got {self.cell_size_s}")
        if self.robot_height_h <= 0:
            raise GeometryError(f"robot height must be positive, got {self.robot_height_h}")

    def cell_center_world(self, px: int, py: int) -> tuple[float, float]:
        """World (x, z) of a cell center, the inverse of project_to_grid."""
        x = (px - self.h_bar / 2.0) * self.cell_size_s
        z = (self.w_bar / 2.0 - py) * self.cell_size_s
        return x, z


def backproject(pixel, depth_raw, intr: CameraIntrinsics, max_depth_m: float = DEFAULT_MAX_DEPTH_M):
    """Pinhole back-projection of one pixel to a camera-frame 3D point.

    Returns None for non-positive depth or depth beyond max_depth_m.
    """
    row, col = pixel
    d = float(depth_raw) * intr.depth_scale
    if d <= 0 or d > max_depth_m:
        return None
    return np.array([(col - intr.cx) * d / intr.fx, (row - intr.cy) * d / intr.fy, d])


def to_world(p_cam: np.ndarray, pose: Pose) -> np.ndarray:
    return pose.rotation @ np.asarray(p_cam, dtype=np.float64) + pose.translation


def project_to_grid(p_world, grid: GridSpec):
    """Map a world point onto the top-down grid.

    px = floor(H/2 + x/s + 0.5), py = floor(W/2 - z/s + 0.5); floor is the
    mathematical floor, also for negative coordinates. Returns None when
    the cell falls outside the grid.
    """
    x = float(p_world[0])
    z = float(p_world[2])
    px = math.floor(grid.h_bar / 2.0 + x / grid.cell_size_s + 0.5)
    py = math.floor(grid.w_bar / 2.0 - z / grid.cell_size_s + 0.5)
    if not (0 <= px < grid.h_bar and 0 <= py < grid.w_bar):
        return None
    return px, py


def project_points_to_grid(points_world: np.ndarray, grid: GridSpec):
    """Vectorized project_to_grid over an (N, 3) array.

    Returns (px, py, in_bounds) arrays; px/py are valid only where
    in_bounds is True.
    """
    pts = np.asarray(points_world, dtype=np.float64)
    px = np.floor(grid.h_bar / 2.0 + pts[:, 0] / grid.cell_size_s + 0.5).astype(np.int64)
    py = np.floor(grid.w_bar / 2.0 - pts[:, 2] / grid.cell_size_s + 0.5).astype(np.int64)
    ok = (px >= 0) & (px < grid.h_bar) & (py >= 0) & (py < grid.w_bar)
    return px, py, ok


def robot_camera_rotation() -> np.ndarray:
    """Rotation from the camera frame into the robot frame."""
    return np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
