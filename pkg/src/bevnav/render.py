"""Figure rendering for the report path: BEV reconstruction, semantic
label map, occupancy, and trajectory overlays."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .instances import InstanceMap
from .nav import Trajectory
from .scenes import Metrics


def _crop_bounds(observed: np.ndarray, pad: int = 10):
    rows, cols = np.nonzero(observed)
    if rows.size == 0:
        return 0, observed.shape[0], 0, observed.shape[1]
    return (
        max(0, rows.min() - pad), min(observed.shape[0], rows.max() + pad + 1),
        max(0, cols.min() - pad), min(observed.shape[1], cols.max() + pad + 1),
    )


def save_bev_figure(imap: InstanceMap, path, crop: bool = True):
    bundle = imap.bundle
    r0, r1, c0, c1 = _crop_bounds(bundle.observed) if crop else (0, bundle.bev_color.shape[0], 0, bundle.bev_color.shape[1])
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(bundle.bev_color[r0:r1, c0:c1])
    ax.set_title("BEV reconstruction")
    ax.set_axis_off()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_semantic_figure(imap: InstanceMap, path, crop: bool = True):
    labels = imap.pixel_labels.labels
    observed = imap.bundle.observed
    r0, r1, c0, c1 = _crop_bounds(observed) if crop else (0, labels.shape[0], 0, labels.shape[1])
    shown = np.where(observed, labels, -1)[r0:r1, c0:c1]
    n = len(imap.category_vocab)
    fig, ax = plt.subplots(figsize=(7, 6))
    im = ax.imshow(shown, cmap="tab20", vmin=-1, vmax=max(n - 1, 1))
    ax.set_title("semantic labels")
    ax.set_axis_off()
    cbar = fig.colorbar(im, ax=ax, ticks=range(n), shrink=0.8)
    cbar.ax.set_yticklabels(imap.category_vocab.labels[:n])
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_trajectory_figure(imap: InstanceMap, trajectory: Trajectory, path, crop: bool = True):
    """Path over the BEV image; start marker green, end marker red."""
    bundle = imap.bundle
    r0, r1, c0, c1 = _crop_bounds(bundle.observed) if crop else (0, bundle.bev_color.shape[0], 0, bundle.bev_color.shape[1])
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(bundle.bev_color[r0:r1, c0:c1])
    cells = trajectory.cells
    if cells:
        rows = [r - r0 for r, _ in cells]
        cols = [c - c0 for _, c in cells]
        ax.plot(cols, rows, "-", color="deepskyblue", linewidth=1.5)
        ax.plot(cols[0], rows[0], "o", color="lime", markersize=9, label="start")
        ax.plot(cols[-1], rows[-1], "o", color="red", markersize=9, label="end")
        for step in trajectory.stop_events():
            ax.plot(step.cell[1] - c0, step.cell[0] - r0, "x", color="orange", markersize=8)
        ax.legend(loc="upper right")
    ax.set_title("trajectory")
    ax.set_axis_off()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_trajectory_csv(trajectory: Trajectory, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "row", "col", "heading_deg", "event"])
        for i, step in enumerate(trajectory.steps):
            writer.writerow([i, step.cell[0], step.cell[1], f"{step.heading_deg:.3f}", step.event])


def save_metrics_csv(metrics: Metrics, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tasks", "subgoals", "SN", "SR", "T_1", "T_2", "T_3", "T_4"])
        writer.writerow([
            metrics.tasks, metrics.subgoals, metrics.sn, f"{metrics.sr:.4f}",
            *(f"{t:.4f}" for t in metrics.t_k),
        ])


def format_metrics_table(metrics: Metrics) -> str:
    header = f"{'tasks':>6} {'subgoals':>9} {'SN':>4} {'SR':>6} " + " ".join(
        f"{f'T_{k}':>6}" for k in range(1, 5)
    )
    row = f"{metrics.tasks:>6} {metrics.subgoals:>9} {metrics.sn:>4} {metrics.sr:>6.2f} " + " ".join(
        f"{t:>6.2f}" for t in metrics.t_k
    )
    return header + "\n" + row


def save_metrics_figure(metrics: Metrics, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ks = [1, 2, 3, 4]
    ax.bar([str(k) for k in ks], metrics.t_k, color="steelblue")
    ax.axhline(metrics.sr, color="darkorange", linestyle="--", label=f"SR = {metrics.sr:.2f}")
    ax.set_xlabel("k")
    ax.set_ylabel("T_k")
    ax.set_ylim(0, 1.05)
    ax.set_title("task progress")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
