"""Deterministic synthetic scene generation and the evaluation metrics.

Scenes are rooms with axis-aligned box obstacles on a flat floor, rendered
to nadir RGB-D frames with per-pixel embeddings. Embeddings are block
one-hot: the category block concatenated with the color block, scaled to
unit norm, plus optional Gaussian noise (renormalized). Object rectangle
bounds snap to grid-cell boundaries so every cell belongs to exactly one
region, which makes the generator's rasters an exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics, GridSpec, Pose
from .labels import Vocabulary
from .mapping import FrameInput

FLOOR_LABEL = "floor"
NO_COLOR_LABEL = "none"

COLOR_RGB = {
    "none": (128, 128, 128),
    "red": (220, 40, 40),
    "yellow": (230, 210, 40),
    "black": (30, 30, 30),
    "blue": (40, 80, 220),
    "green": (40, 180, 70),
    "white": (240, 240, 240),
}

CAMERA_HEIGHT_M = 8.0
IMAGE_SIZE = 80
FOOTPRINT_HALF_M = 1.0
CAMERA_SPACING_M = 1.0

# World-from-camera rotation for a straight-down camera: camera z maps to
# world -y, camera x to world x, camera y to world z.
NADIR_ROTATION = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class SceneObject:
    category: str
    color: str
    center_x: float
    center_z: float
    width_m: float  # extent along world x
    depth_m: float  # extent along world z


@dataclass
class SceneSpec:
    seed: int
    room_extent_m: float
    objects: list[SceneObject]
    noise_sigma: float = 0.0
    categories: list[str] = field(default_factory=list)
    colors: list[str] = field(default_factory=list)
    grid: GridSpec = field(default_factory=lambda: GridSpec(500, 500))

    def __post_init__(self):
        if not self.categories:
            extra = sorted({o.category for o in self.objects})
            self.categories = [FLOOR_LABEL] + [c for c in extra if c != FLOOR_LABEL]
        if not self.colors:
            extra = sorted({o.color for o in self.objects})
            self.colors = [NO_COLOR_LABEL] + [c for c in extra if c != NO_COLOR_LABEL]
        for o in self.objects:
            if o.category not in self.categories:
                raise SceneError(f"object category {o.category!r} not in vocabulary")
            if o.color not in self.colors:
                raise SceneError(f"object color {o.color!r} not in vocabulary")


@dataclass
class GroundTruth:
    label_raster: np.ndarray  # (H, W) category index per cell
    color_raster: np.ndarray  # (H, W) color index per cell
    instance_raster: np.ndarray  # (H, W) object ordinal + 1, 0 = floor
    rects: list[tuple[float, float, float, float]]  # snapped (x0, x1, z0, z1)
    heights: list[float]
    centroid_cells: list[tuple[int, int]]


@dataclass
class SyntheticDataset:
    spec: SceneSpec
    grid: GridSpec
    intrinsics: CameraIntrinsics
    category_vocab: Vocabulary
    color_vocab: Vocabulary
    category_embeddings: np.ndarray  # (N_cat, C)
    color_embeddings: np.ndarray  # (N_col, C)
    frames: list[FrameInput]
    ground_truth: GroundTruth
    max_depth_m: float = CAMERA_HEIGHT_M + 1.0

    @property
    def embed_dim(self) -> int:
        return self.category_embeddings.shape[1]


def _snap_boundary(value: float, s: float) -> float:
    """Snap to the nearest cell boundary, which lies at (k + 0.5) * s."""
    return (math.floor(value / s) + 0.5) * s


def block_onehot_embeddings(n_categories: int, n_colors: int):
    """Label-embedding matrices for the block one-hot scheme."""
    dim = n_categories + n_colors
    cat = np.zeros((n_categories, dim))
    cat[np.arange(n_categories), np.arange(n_categories)] = 1.0
    col = np.zeros((n_colors, dim))
    col[np.arange(n_colors), n_categories + np.arange(n_colors)] = 1.0
    return cat, col


def object_height(index: int) -> float:
    # Distinct sub-robot heights so the descending update is exercised.
    return 0.3 + 0.05 * (index % 5)


def _snapped_rects(spec: SceneSpec) -> list[tuple[float, float, float, float]]:
    s = spec.grid.cell_size_s
    rects = []
    for o in spec.objects:
        x0 = _snap_boundary(o.center_x - o.width_m / 2.0, s)
        x1 = _snap_boundary(o.center_x + o.width_m / 2.0, s)
        z0 = _snap_boundary(o.center_z - o.depth_m / 2.0, s)
        z1 = _snap_boundary(o.center_z + o.depth_m / 2.0, s)
        if x1 <= x0 or z1 <= z0:
            raise SceneError(f"object {o} degenerates after grid snapping")
        rects.append((x0, x1, z0, z1))
    for i, a in enumerate(rects):
        for b in rects[i + 1:]:
            if a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]:
                raise SceneError(f"objects overlap: {a} and {b}")
    return rects


def _ground_truth(spec: SceneSpec, rects) -> GroundTruth:
    grid = spec.grid
    px = np.arange(grid.h_bar)
    py = np.arange(grid.w_bar)
    cx = (px - grid.h_bar / 2.0) * grid.cell_size_s  # cell-center world x per row
    cz = (grid.w_bar / 2.0 - py) * grid.cell_size_s  # cell-center world z per col
    x_grid = cx[:, None]
    z_grid = cz[None, :]

    labels = np.zeros((grid.h_bar, grid.w_bar), dtype=np.int64)
    colors = np.zeros_like(labels)
    instances = np.zeros_like(labels)
    centroids = []
    heights = []
    for i, (o, (x0, x1, z0, z1)) in enumerate(zip(spec.objects, rects)):
        inside = (x_grid >= x0) & (x_grid < x1) & (z_grid >= z0) & (z_grid < z1)
        labels[inside] = spec.categories.index(o.category)
        colors[inside] = spec.colors.index(o.color)
        instances[inside] = i + 1
        rows, cols = np.nonzero(inside)
        if rows.size == 0:
            raise SceneError(f"object {o} covers no grid cell")
        centroids.append((int(round(rows.mean())), int(round(cols.mean()))))
        heights.append(object_height(i))
    return GroundTruth(labels, colors, instances, list(rects), heights, centroids)


def _camera_positions(spec: SceneSpec):
    half = spec.room_extent_m / 2.0
    coords = np.arange(-half, half + 1e-9, CAMERA_SPACING_M)
    for x in coords:
        for z in coords:
            yield float(x), float(z)


def _render_frame(
    spec: SceneSpec,
    gt: GroundTruth,
    intr: CameraIntrinsics,
    cam_x: float,
    cam_z: float,
    cat_emb: np.ndarray,
    col_emb: np.ndarray,
    rng: np.random.Generator,
) -> FrameInput:
    n = IMAGE_SIZE
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ax = (cols - intr.cx) / intr.fx  # world-x direction per unit descent
    az = (rows - intr.cy) / intr.fy  # world-z direction per unit descent

    surf_height = np.full((n, n), np.nan)
    surf_obj = np.full((n, n), -1, dtype=np.int64)  # -1 floor, -2 invalid

    order = sorted(range(len(gt.rects)), key=lambda i: -gt.heights[i])
    for i in order:
        x0, x1, z0, z1 = gt.rects[i]
        h_obj = gt.heights[i]
        t = CAMERA_HEIGHT_M - h_obj
        hx = cam_x + ax * t
        hz = cam_z + az * t
        hit = (hx >= x0) & (hx < x1) & (hz >= z0) & (hz < z1) & np.isnan(surf_height)
        surf_height[hit] = h_obj
        surf_obj[hit] = i

    ground_open = np.isnan(surf_height)
    gx = cam_x + ax * CAMERA_HEIGHT_M
    gz = cam_z + az * CAMERA_HEIGHT_M
    occluded = np.zeros((n, n), dtype=bool)
    for x0, x1, z0, z1 in gt.rects:
        occluded |= (gx >= x0) & (gx < x1) & (gz >= z0) & (gz < z1)
    floor_hit = ground_open & ~occluded
    surf_height[floor_hit] = 0.0
    surf_obj[ground_open & occluded] = -2

    depth = np.where(surf_obj == -2, 0.0, CAMERA_HEIGHT_M - np.nan_to_num(surf_height))

    cat_idx = np.zeros((n, n), dtype=np.int64)
    col_idx = np.zeros((n, n), dtype=np.int64)
    rgb = np.zeros((n, n, 3), dtype=np.uint8)
    rgb[...] = COLOR_RGB[NO_COLOR_LABEL]
    for i, o in enumerate(spec.objects):
        sel = surf_obj == i
        cat_idx[sel] = spec.categories.index(o.category)
        col_idx[sel] = spec.colors.index(o.color)
        rgb[sel] = COLOR_RGB.get(o.color, (200, 200, 200))

    emb = (cat_emb[cat_idx] + col_emb[col_idx]) / math.sqrt(2.0)
    if spec.noise_sigma > 0:
        emb = emb + rng.normal(0.0, spec.noise_sigma, size=emb.shape)
        norms = np.linalg.norm(emb, axis=-1, keepdims=True)
        emb = emb / np.where(norms == 0, 1.0, norms)

    pose = Pose(NADIR_ROTATION, np.array([cam_x, CAMERA_HEIGHT_M, cam_z]))
    return FrameInput(
        rgb=rgb,
        depth=depth.astype(np.float32),
        pose=pose,
        embedding_pixels=emb.astype(np.float32),
        intrinsics=intr,
    )


def generate_scene(spec: SceneSpec) -> SyntheticDataset:
    """Render the scene along a serpentine nadir camera path. Fully
    determined by the spec's seed."""
    rects = _snapped_rects(spec)
    gt = _ground_truth(spec, rects)
    cat_emb, col_emb = block_onehot_embeddings(len(spec.categories), len(spec.colors))

    f = (IMAGE_SIZE / 2.0) * CAMERA_HEIGHT_M / FOOTPRINT_HALF_M
    intr = CameraIntrinsics(
        fx=f, fy=f, cx=(IMAGE_SIZE - 1) / 2.0, cy=(IMAGE_SIZE - 1) / 2.0, depth_scale=1.0
    )

    rng = np.random.default_rng(spec.seed)
    frames = [
        _render_frame(spec, gt, intr, cam_x, cam_z, cat_emb, col_emb, rng)
        for cam_x, cam_z in _camera_positions(spec)
    ]
    return SyntheticDataset(
        spec=spec,
        grid=spec.grid,
        intrinsics=intr,
        category_vocab=Vocabulary(tuple(spec.categories), "category"),
        color_vocab=Vocabulary(tuple(spec.colors), "color"),
        category_embeddings=cat_emb,
        color_embeddings=col_emb,
        frames=frames,
        ground_truth=gt,
    )


# -- tasks and metrics -------------------------------------------------------


@dataclass
class Subgoal:
    name: str
    instance_idx: int
    color: str | None
    target_cell: tuple[int, int]


@dataclass
class Task:
    start_cell: tuple[int, int]
    subgoals: list[Subgoal]

    def __post_init__(self):
        if len(self.subgoals) != 4:
            raise SceneError(f"a task needs exactly 4 subgoals, got {len(self.subgoals)}")


@dataclass
class Metrics:
    sn: int
    sr: float
    t_k: tuple[float, float, float, float]
    tasks: int

    @property
    def subgoals(self) -> int:
        return 4 * self.tasks


def _ordinal_for(dataset: SyntheticDataset, index: int) -> int:
    """1-based left-to-right ordinal of an object among those sharing its
    category and color."""
    spec = dataset.spec
    target = spec.objects[index]
    peers = [
        i for i, o in enumerate(spec.objects)
        if o.category == target.category and o.color == target.color
    ]
    peers.sort(key=lambda i: dataset.ground_truth.centroid_cells[i][1])
    return peers.index(index) + 1


def make_tasks(dataset: SyntheticDataset, n_tasks: int, seed: int) -> list[Task]:
    spec = dataset.spec
    if len(spec.objects) < 4:
        raise SceneError(
            f"need at least 4 distinct instances for 4-subgoal tasks, have {len(spec.objects)}"
        )
    gt = dataset.ground_truth
    rng = np.random.default_rng(seed)

    free = gt.instance_raster == 0
    # Keep starts clear of obstacles and the map border.
    from scipy import ndimage

    margin_cells = int(round(0.5 / spec.grid.cell_size_s))
    clear = ndimage.distance_transform_edt(free) > margin_cells
    half = spec.room_extent_m / 2.0 - 0.5
    rows, cols = np.nonzero(clear)
    cx = (rows - spec.grid.h_bar / 2.0) * spec.grid.cell_size_s
    cz = (spec.grid.w_bar / 2.0 - cols) * spec.grid.cell_size_s
    in_room = (np.abs(cx) < half) & (np.abs(cz) < half)
    rows, cols = rows[in_room], cols[in_room]
    if rows.size == 0:
        raise SceneError("no clear start cells in the scene")

    tasks = []
    for _ in range(n_tasks):
        pick = rng.choice(rows.size)
        start = (int(rows[pick]), int(cols[pick]))
        chosen = rng.choice(len(spec.objects), size=4, replace=False)
        subgoals = [
            Subgoal(
                name=spec.objects[i].category,
                instance_idx=_ordinal_for(dataset, i),
                color=spec.objects[i].color,
                target_cell=gt.centroid_cells[i],
            )
            for i in chosen
        ]
        tasks.append(Task(start_cell=start, subgoals=subgoals))
    return tasks


def evaluate(outcomes: list[list[bool]]) -> Metrics:
    """SN/SR over subgoals and T_k over tasks from per-subgoal outcomes."""
    if not outcomes:
        return Metrics(0, 0.0, (0.0, 0.0, 0.0, 0.0), 0)
    for row in outcomes:
        if len(row) != 4:
            raise SceneError(f"each task must record 4 outcomes, got {len(row)}")
    n_tasks = len(outcomes)
    sn = sum(sum(row) for row in outcomes)
    t_k = tuple(
        sum(1 for row in outcomes if all(row[:k])) / n_tasks for k in range(1, 5)
    )
    return Metrics(sn=sn, sr=sn / (4 * n_tasks), t_k=t_k, tasks=n_tasks)
