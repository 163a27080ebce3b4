"""Command-line interface: synth, build, query, navigate, eval, export-fig.

Exit status: 0 on success, 1 on a domain error (bad data, unreachable
goal, missing instance), 2 on a usage error.
"""

from __future__ import annotations

import functools
import json
import logging
from pathlib import Path

import click
import numpy as np

from . import formats, navlang, pipeline, render
from .formats import FormatError, RunConfig
from .geometry import GridSpec
from .locate import ORDER_LEFT_TO_RIGHT, ORDER_NEAREST, LocalizationError, ObjAttr, locate
from .nav import Agent, PlanningError
from .scenes import SceneObject, SceneSpec, generate_scene

log = logging.getLogger(__name__)

_DOMAIN_ERRORS = (
    FormatError,
    LocalizationError,
    PlanningError,
    navlang.NavSyntaxError,
    navlang.NavRuntimeError,
    ValueError,
    OSError,
)


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _DOMAIN_ERRORS as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _parse_cell(value: str) -> tuple[int, int]:
    try:
        row, col = (int(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected 'row,col', got {value!r}")
    return row, col


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info logging.")
def main(verbose):
    """Instance-aware BEV semantic mapping and language-driven navigation."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--scene", "scene_name", default=None, help="Only this scene from the config.")
@_domain_errors
def synth(config_path, out_dir, scene_name):
    """Generate synthetic scene datasets from the run configuration."""
    cfg = formats.load_config(config_path)
    if not cfg.scenes:
        raise click.ClickException(f"{config_path}: no scenes defined")
    written = 0
    for raw in cfg.scenes:
        name = raw.get("name", f"scene{written}")
        if scene_name is not None and name != scene_name:
            continue
        spec = SceneSpec(
            seed=int(raw.get("seed", 0)),
            room_extent_m=float(raw.get("room_extent_m", 8.0)),
            objects=[
                SceneObject(
                    category=o["category"],
                    color=o.get("color", "none"),
                    center_x=float(o["x"]),
                    center_z=float(o["z"]),
                    width_m=float(o["width_m"]),
                    depth_m=float(o["depth_m"]),
                )
                for o in raw.get("objects", [])
            ],
            noise_sigma=float(raw.get("noise_sigma", 0.0)),
            categories=list(cfg.categories),
            colors=list(cfg.colors),
            grid=cfg.grid,
        )
        dataset = generate_scene(spec)
        formats.save_dataset(dataset, Path(out_dir) / name)
        click.echo(f"wrote dataset {name!r}: {len(dataset.frames)} frames")
        written += 1
    if written == 0:
        raise click.ClickException(f"scene {scene_name!r} not found in {config_path}")


@main.command()
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "archive_path", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--masks", "mask_path", default=None, type=click.Path(exists=True),
              help="External mask record file (skips the surrogate segmenter).")
@_domain_errors
def build(dataset_dir, archive_path, config_path, mask_path):
    """Build a map archive from a dataset directory."""
    cfg = formats.load_config(config_path) if config_path else RunConfig()
    dataset = formats.load_dataset(dataset_dir)
    mask_set = None
    if mask_path:
        mask_set, warnings = formats.load_mask_set(
            mask_path, expected_shape=(dataset.grid.h_bar, dataset.grid.w_bar)
        )
        for w in warnings:
            log.warning("%s: %s", mask_path, w)
        click.echo(f"loaded {len(mask_set.masks)} external masks ({len(warnings)} warnings)")
    built = pipeline.build_map(
        dataset,
        inflation_radius_m=cfg.inflation_radius_m,
        min_mask_area=cfg.min_mask_area,
        mask_set=mask_set,
    )
    provenance = {
        "dataset_hash": formats.file_sha256(Path(dataset_dir) / "manifest.json"),
        "config_hash": formats.file_sha256(config_path) if config_path else None,
        "tool_version": formats.TOOL_VERSION,
    }
    formats.save_map(built.imap, built.occupancy, archive_path, provenance)
    n_known = sum(1 for r in built.imap.records if r.queryable)
    click.echo(
        f"built map: {len(built.imap.records)} instances ({n_known} labeled), "
        f"archive {archive_path}"
    )


@main.command()
@click.argument("archive_path", type=click.Path(exists=True))
@click.argument("name")
@click.option("--idx", default=0, help="1-based ordinal; 0 = nearest.")
@click.option("--color", default=None)
@click.option("--agent", "agent_cell", default=None, help="Agent cell as 'row,col'.")
@click.option("--ordering", type=click.Choice([ORDER_NEAREST, ORDER_LEFT_TO_RIGHT]),
              default=None, help="Defaults to left_to_right when --idx >= 1.")
@_domain_errors
def query(archive_path, name, idx, color, agent_cell, ordering):
    """Locate an instance by attributes and print a JSON report."""
    imap, occupancy, _ = formats.load_map(archive_path)
    if agent_cell is None:
        cell = (imap.bundle.grid.h_bar // 2, imap.bundle.grid.w_bar // 2)
    else:
        cell = _parse_cell(agent_cell)
    if ordering is None:
        ordering = ORDER_LEFT_TO_RIGHT if idx >= 1 else ORDER_NEAREST
    ref = locate(ObjAttr(name, idx, color), imap, cell, occupancy, ordering)
    r = ref.record
    click.echo(json.dumps({
        "label": r.label,
        "label_id": r.label_id,
        "color": r.color,
        "num_of_same_class": r.num_of_same_class,
        "area": r.area,
        "bbox": list(r.bbox),
        "score": r.score,
        "goal_cell": list(ref.goal_cell),
        "approach_cell": list(ref.approach_cell) if ref.approach_cell else None,
    }, indent=1))


@main.command()
@click.argument("archive_path", type=click.Path(exists=True))
@click.option("--program", "program_path", default=None, type=click.Path(exists=True),
              help="Program file (.nav).")
@click.option("--command", "command_text", default=None,
              help="Natural-language command (translated or fallback-parsed).")
@click.option("--start", "start_cell", required=True, help="Start cell as 'row,col'.")
@click.option("--heading", default=0.0, help="Start heading in degrees (0 = north).")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@_domain_errors
def navigate(archive_path, program_path, command_text, start_cell, heading, config_path, out_dir):
    """Execute a navigation program and render the trajectory."""
    if (program_path is None) == (command_text is None):
        raise click.UsageError("provide exactly one of --program or --command")
    imap, occupancy, _ = formats.load_map(archive_path)
    cfg = formats.load_config(config_path) if config_path else RunConfig()

    if program_path:
        program = navlang.parse_program(Path(program_path).read_text())
    else:
        categories = imap.category_vocab.labels
        colors = imap.color_vocab.labels
        if cfg.translator:
            program = navlang.external_translate(
                command_text, cfg.translator["host"], int(cfg.translator["port"]),
                categories, colors,
            )
        else:
            extraction = navlang.extract_attributes(command_text, categories, colors)
            for w in extraction.warnings:
                log.warning("command parsing: %s", w)
            if not extraction.attrs:
                raise click.ClickException(
                    f"no known landmarks recognized in {command_text!r}"
                )
            program = navlang.fallback_program(extraction.attrs)

    agent = Agent(imap, occupancy, _parse_cell(start_cell), heading,
                  clearance_m=cfg.clearance_m)
    error = None
    try:
        navlang.interpret(program, agent)
    except navlang.NavRuntimeError as exc:
        error = str(exc)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    render.save_trajectory_csv(agent.trajectory, out / "trajectory.csv")
    render.save_trajectory_figure(imap, agent.trajectory, out / "trajectory.png")
    (out / "program.nav").write_text(navlang.pretty_print(program) + "\n")
    click.echo(f"trajectory: {len(agent.trajectory.steps)} steps -> {out}")
    if error:
        raise click.ClickException(f"execution halted: {error}")


@main.command(name="eval")
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--archive", "archive_path", default=None, type=click.Path(exists=True),
              help="Use a prebuilt archive instead of building now.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--tasks", "n_tasks", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@_domain_errors
def eval_cmd(dataset_dir, archive_path, config_path, n_tasks, seed, out_dir):
    """Run the navigation task suite against a dataset's ground truth."""
    cfg = formats.load_config(config_path) if config_path else RunConfig()
    dataset = formats.load_dataset(dataset_dir)
    if dataset.ground_truth_npz is None:
        raise click.ClickException(f"{dataset_dir}: no ground_truth.npz; cannot evaluate")
    if archive_path:
        imap, occupancy, _ = formats.load_map(archive_path)
        built = pipeline.BuiltMap(imap=imap, occupancy=occupancy)
    else:
        built = pipeline.build_map(dataset, inflation_radius_m=cfg.inflation_radius_m,
                                   min_mask_area=cfg.min_mask_area)
    tasks = pipeline.make_tasks_from_arrays(
        dataset.ground_truth_npz, dataset.category_vocab, dataset.color_vocab,
        traversable=~built.occupancy, n_tasks=n_tasks, seed=seed,
        cell_size_s=dataset.grid.cell_size_s,
    )
    metrics = pipeline.run_suite(built, tasks)
    click.echo(render.format_metrics_table(metrics))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    render.save_metrics_csv(metrics, out / "metrics.csv")
    render.save_metrics_figure(metrics, out / "metrics.png")
    report = {
        "tasks": metrics.tasks,
        "subgoals": metrics.subgoals,
        "SN": metrics.sn,
        "SR": metrics.sr,
        "T_k": list(metrics.t_k),
        "seed": seed,
    }
    (out / "metrics.json").write_text(json.dumps(report, indent=1))


@main.command(name="export-fig")
@click.argument("archive_path", type=click.Path(exists=True))
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@_domain_errors
def export_fig(archive_path, out_dir):
    """Render BEV and semantic figures from a map archive."""
    imap, _, _ = formats.load_map(archive_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    render.save_bev_figure(imap, out / "bev.png")
    render.save_semantic_figure(imap, out / "semantic.png")
    click.echo(f"figures written to {out}")


if __name__ == "__main__":
    main()
