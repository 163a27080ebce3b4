import numpy as np

from bevnav import pipeline
from bevnav.scenes import make_tasks


class TestBuildMap:
    def test_all_instances_recovered_with_correct_attributes(self, demo_dataset, demo_built):
        spec = demo_dataset.spec
        assert len(demo_built.imap.records) == len(spec.objects)
        label_acc, color_acc = pipeline.instance_attribute_accuracy(demo_built, demo_dataset)
        assert label_acc == 1.0
        assert color_acc == 1.0

    def test_pixel_labels_match_ground_truth_exactly(self, demo_dataset, demo_built):
        assert pipeline.pixel_label_accuracy(demo_built, demo_dataset) == 1.0

    def test_occupancy_covers_objects_and_unobserved_space(self, demo_dataset, demo_built):
        gt = demo_dataset.ground_truth
        assert np.all(demo_built.occupancy[gt.instance_raster > 0])
        assert np.all(demo_built.occupancy[~demo_built.bundle.observed])


class TestRunSuite:
    def test_noiseless_tasks_all_succeed(self, demo_dataset, demo_built):
        tasks = make_tasks(demo_dataset, n_tasks=4, seed=1)
        metrics = pipeline.run_suite(demo_built, tasks)
        assert metrics.sr == 1.0
        assert metrics.t_k == (1.0, 1.0, 1.0, 1.0)

    def test_unresolvable_subgoal_counts_as_failure(self, demo_dataset, demo_built):
        tasks = make_tasks(demo_dataset, n_tasks=1, seed=1)
        tasks[0].subgoals[1].name = "piano"
        outcomes, agent = pipeline.run_task(demo_built, tasks[0])
        assert outcomes[1] is False
        assert outcomes[0] and outcomes[2] and outcomes[3]


class TestTasksFromArrays:
    def test_matches_in_memory_task_construction(self, demo_dataset, demo_built):
        gt = demo_dataset.ground_truth
        arrays = {
            "instance_raster": gt.instance_raster,
            "label_raster": gt.label_raster,
            "color_raster": gt.color_raster,
            "centroid_cells": np.array(gt.centroid_cells),
        }
        tasks = pipeline.make_tasks_from_arrays(
            arrays, demo_dataset.category_vocab, demo_dataset.color_vocab,
            traversable=~demo_built.occupancy, n_tasks=3, seed=0,
            cell_size_s=demo_dataset.grid.cell_size_s,
        )
        assert len(tasks) == 3
        metrics = pipeline.run_suite(demo_built, tasks)
        assert metrics.sr == 1.0
