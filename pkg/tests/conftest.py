"""Shared fixtures: a small deterministic scene, its built map, and a
hand-assembled toy instance map for navigation-level tests."""

from __future__ import annotations

import numpy as np
import pytest

from bevnav import instances, mapping, pipeline
from bevnav.geometry import GridSpec
from bevnav.labels import PixelLabelMap, Vocabulary
from bevnav.scenes import SceneObject, SceneSpec, generate_scene

DEMO_OBJECTS = [
    SceneObject("table", "yellow", -2.0, -2.0, 1.0, 0.6),
    SceneObject("table", "yellow", -2.0, 0.0, 1.0, 0.6),
    SceneObject("table", "yellow", -2.0, 2.0, 1.0, 0.6),
    SceneObject("sofa", "red", 1.5, 2.0, 1.0, 0.8),
    SceneObject("chair", "black", 1.5, -2.0, 0.6, 0.6),
    SceneObject("chair", "yellow", 2.5, 0.0, 0.6, 0.6),
]


def demo_spec(seed: int = 0, noise_sigma: float = 0.0, grid: GridSpec | None = None) -> SceneSpec:
    return SceneSpec(
        seed=seed,
        room_extent_m=6.0,
        objects=list(DEMO_OBJECTS),
        noise_sigma=noise_sigma,
        grid=grid or GridSpec(240, 240),
    )


@pytest.fixture(scope="session")
def demo_dataset():
    return generate_scene(demo_spec())


@pytest.fixture(scope="session")
def demo_built(demo_dataset):
    return pipeline.build_map(demo_dataset)


def make_toy_imap():
    """A fully observed 60x60 map (cell size 0.1 m) with five rectangular
    instances, built through the public fusion API.

    Layout (rows x cols, inclusive):
      three yellow tables rows 10-15, cols 10-17 / 28-35 / 44-51
      one red sofa        rows 40-49, cols 20-39  (2 m x 1 m bbox)
      one black chair     rows 42-47, cols 6-11
    """
    n = 60
    grid = GridSpec(n, n, cell_size_s=0.1, robot_height_h=1.5)
    bundle = mapping.init_maps(grid, embed_dim=4)
    bundle.obs_count[...] = 1
    bundle.height[...] = 0.0

    category_vocab = Vocabulary(("floor", "table", "chair", "sofa"), "category")
    color_vocab = Vocabulary(("none", "yellow", "red", "black"), "color")

    labels = np.zeros((n, n), dtype=np.int64)
    colors = np.zeros((n, n), dtype=np.int64)
    rects = [
        ((10, 15, 10, 17), "table", "yellow"),
        ((10, 15, 28, 35), "table", "yellow"),
        ((10, 15, 44, 51), "table", "yellow"),
        ((40, 49, 20, 39), "sofa", "red"),
        ((42, 47, 6, 11), "chair", "black"),
    ]
    masks = []
    for (r0, r1, c0, c1), cat, col in rects:
        mask = np.zeros((n, n), dtype=bool)
        mask[r0:r1 + 1, c0:c1 + 1] = True
        labels[mask] = category_vocab.index(cat)
        colors[mask] = color_vocab.index(col)
        masks.append(mask)

    plm = PixelLabelMap(labels)
    clm = PixelLabelMap(colors)
    imap = instances.build_instance_map(
        bundle, instances.MaskSet(masks=masks), plm, clm, category_vocab, color_vocab
    )
    occupancy = mapping.obstacle_grid(bundle, {0}, labels, inflation_radius_m=0.0)
    return imap, occupancy


@pytest.fixture()
def toy_map():
    return make_toy_imap()


def make_orbit_map():
    """A 100x100 variant with room to walk a full contour orbit south of
    the sofa: three yellow tables, one red sofa (2 m x 1 m), one black
    chair."""
    n = 100
    grid = GridSpec(n, n, cell_size_s=0.1, robot_height_h=1.5)
    bundle = mapping.init_maps(grid, embed_dim=4)
    bundle.obs_count[...] = 1
    bundle.height[...] = 0.0

    category_vocab = Vocabulary(("floor", "table", "chair", "sofa"), "category")
    color_vocab = Vocabulary(("none", "yellow", "red", "black"), "color")

    labels = np.zeros((n, n), dtype=np.int64)
    colors = np.zeros((n, n), dtype=np.int64)
    rects = [
        ((10, 15, 10, 17), "table", "yellow"),
        ((10, 15, 28, 35), "table", "yellow"),
        ((10, 15, 44, 51), "table", "yellow"),
        ((40, 49, 50, 69), "sofa", "red"),
        ((80, 85, 10, 15), "chair", "black"),
    ]
    masks = []
    for (r0, r1, c0, c1), cat, col in rects:
        mask = np.zeros((n, n), dtype=bool)
        mask[r0:r1 + 1, c0:c1 + 1] = True
        labels[mask] = category_vocab.index(cat)
        colors[mask] = color_vocab.index(col)
        masks.append(mask)

    plm = PixelLabelMap(labels)
    clm = PixelLabelMap(colors)
    imap = instances.build_instance_map(
        bundle, instances.MaskSet(masks=masks), plm, clm, category_vocab, color_vocab
    )
    occupancy = mapping.obstacle_grid(bundle, {0}, labels, inflation_radius_m=0.0)
    return imap, occupancy


@pytest.fixture()
def orbit_map():
    return make_orbit_map()
