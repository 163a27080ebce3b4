"""End-to-end orchestration: dataset -> map stack -> instance map ->
navigation program execution -> metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import instances, labels, mapping
from .instances import InstanceMap
from .locate import LocalizationError
from .nav import Agent, PlanningError, check_success
from .navlang import NavRuntimeError
from .scenes import Metrics, SyntheticDataset, Task, evaluate

log = logging.getLogger(__name__)

DEFAULT_MIN_MASK_AREA = 4


@dataclass
class BuiltMap:
    imap: InstanceMap
    occupancy: np.ndarray

    @property
    def bundle(self):
        return self.imap.bundle


def build_map(
    dataset: SyntheticDataset,
    inflation_radius_m: float = 0.15,
    min_mask_area: int = DEFAULT_MIN_MASK_AREA,
    mask_set: instances.MaskSet | None = None,
) -> BuiltMap:
    """Integrate all frames, derive pixel-label maps for both
    vocabularies, segment (surrogate unless masks are supplied), and fuse
    instances."""
    bundle = mapping.init_maps(dataset.grid, dataset.embed_dim)
    for frame in dataset.frames:
        mapping.integrate_frame(bundle, frame, max_depth_m=dataset.max_depth_m)

    cat_emb = labels.load_label_embeddings(dataset.category_vocab, dataset.category_embeddings)
    col_emb = labels.load_label_embeddings(dataset.color_vocab, dataset.color_embeddings)
    embedding = bundle.embedding
    plm = labels.pixel_label_map(labels.similarity(embedding, cat_emb))
    clm = labels.pixel_label_map(labels.similarity(embedding, col_emb))

    if mask_set is None:
        mask_set = instances.surrogate_segment(plm, min_area=min_mask_area)
    imap = instances.build_instance_map(
        bundle, mask_set, plm, clm, dataset.category_vocab, dataset.color_vocab
    )
    occupancy = mapping.obstacle_grid(
        bundle, {0}, plm.labels, inflation_radius_m=inflation_radius_m
    )
    return BuiltMap(imap=imap, occupancy=occupancy)


def run_task(built: BuiltMap, task: Task) -> tuple[list[bool], Agent]:
    """Visit the task's four subgoals in order; a subgoal succeeds when
    the agent stops within the success threshold of its target."""
    agent = Agent(built.imap, built.occupancy, task.start_cell)
    outcomes = []
    s = built.bundle.grid.cell_size_s
    for goal in task.subgoals:
        try:
            obj = agent.get_obj_attributes(goal.name, goal.instance_idx, goal.color)
            agent.move_to_object(obj)
            agent.stop()
            stop_cell = agent.trajectory.steps[-1].cell
            outcomes.append(check_success(stop_cell, goal.target_cell, s))
        except (LocalizationError, PlanningError, NavRuntimeError) as exc:
            log.warning("subgoal %s failed: %s", goal, exc)
            outcomes.append(False)
    return outcomes, agent


def run_suite(built: BuiltMap, tasks: list[Task]) -> Metrics:
    return evaluate([run_task(built, t)[0] for t in tasks])


def make_tasks_from_arrays(
    gt_arrays: dict,
    category_vocab,
    color_vocab,
    traversable: np.ndarray,
    n_tasks: int,
    seed: int,
    cell_size_s: float,
    start_margin_m: float = 0.3,
) -> list[Task]:
    """Task sampling from a dataset's stored ground-truth rasters, for
    datasets loaded from disk (no in-memory scene spec)."""
    from scipy import ndimage

    from .scenes import SceneError, Subgoal

    instance_raster = gt_arrays["instance_raster"]
    label_raster = gt_arrays["label_raster"]
    color_raster = gt_arrays["color_raster"]
    centroid_cells = [tuple(c) for c in np.asarray(gt_arrays["centroid_cells"], dtype=int)]
    n_objects = int(instance_raster.max())
    if n_objects < 4:
        raise SceneError(
            f"need at least 4 distinct instances for 4-subgoal tasks, have {n_objects}"
        )

    info = []
    for i in range(1, n_objects + 1):
        region = instance_raster == i
        cat = category_vocab.labels[int(label_raster[region][0])]
        col = color_vocab.labels[int(color_raster[region][0])]
        info.append((cat, col, centroid_cells[i - 1]))

    def ordinal(i):
        peers = [j for j, (c, k, _) in enumerate(info) if (c, k) == info[i][:2]]
        peers.sort(key=lambda j: info[j][2][1])
        return peers.index(i) + 1

    margin = int(round(start_margin_m / cell_size_s))
    clear = ndimage.distance_transform_edt(traversable) > margin
    rows, cols = np.nonzero(clear)
    if rows.size == 0:
        raise SceneError("no clear start cells available")

    rng = np.random.default_rng(seed)
    tasks = []
    for _ in range(n_tasks):
        pick = rng.choice(rows.size)
        start = (int(rows[pick]), int(cols[pick]))
        chosen = rng.choice(n_objects, size=4, replace=False)
        subgoals = [
            Subgoal(
                name=info[i][0],
                instance_idx=ordinal(i),
                color=info[i][1] if info[i][1] != "none" else None,
                target_cell=info[i][2],
            )
            for i in chosen
        ]
        tasks.append(Task(start_cell=start, subgoals=subgoals))
    return tasks


def pixel_label_accuracy(built: BuiltMap, dataset: SyntheticDataset) -> float:
    """Fraction of observed cells whose category pixel label matches the
    generator's raster."""
    observed = built.bundle.observed
    gt = dataset.ground_truth.label_raster
    got = built.imap.pixel_labels.labels
    total = int(observed.sum())
    if total == 0:
        return 0.0
    return float((got[observed] == gt[observed]).sum() / total)


def instance_attribute_accuracy(
    built: BuiltMap, dataset: SyntheticDataset
) -> tuple[float, float]:
    """Per-ground-truth-instance label and color accuracy: each generator
    object is matched to the record covering most of its raster cells."""
    gt = dataset.ground_truth
    spec = dataset.spec
    n = len(spec.objects)
    if n == 0:
        return 1.0, 1.0
    label_ok = color_ok = 0
    for i, o in enumerate(spec.objects):
        region = gt.instance_raster == i + 1
        ids, counts = np.unique(built.imap.instance_ids[region], return_counts=True)
        keep = ids != 0
        ids, counts = ids[keep], counts[keep]
        if ids.size == 0:
            continue
        record = built.imap.record_by_id(int(ids[np.argmax(counts)]))
        if record.label == o.category:
            label_ok += 1
        if record.color == o.color:
            color_ok += 1
    return label_ok / n, color_ok / n
