"""File formats: embedding tensors, RLE mask records, pose files, dataset
manifests, run configuration, and the map archive.

Embedding tensor files are flat little-endian binaries with a fixed
header: magic ``BEVT``, version, rows, cols, channels (all uint32),
followed by float32 data in row-major order. Mask record files are JSON
arrays using the segmenter-style field names with the segmentation stored
as column-major run-length encoding (counts alternate runs of 0s and 1s,
starting with 0s).
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from .geometry import CameraIntrinsics, GridSpec, Pose
from .instances import InstanceMap, MaskRecord, MaskSet
from .labels import PixelLabelMap, Vocabulary
from .mapping import FrameInput, MapBundle

TENSOR_MAGIC = b"BEVT"
TENSOR_VERSION = 1
ARCHIVE_VERSION = 1
TOOL_VERSION = "0.1.0"


class FormatError(ValueError):
    pass


# -- embedding tensors -------------------------------------------------------


def write_tensor(path, array: np.ndarray):
    arr = np.asarray(array, dtype="<f4")
    if arr.ndim == 2:
        arr = arr[:, None, :]
    if arr.ndim != 3:
        raise FormatError(f"tensor must be 2D or 3D, got shape {array.shape}")
    header = TENSOR_MAGIC + np.array(
        [TENSOR_VERSION, *arr.shape], dtype="<u4"
    ).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TENSOR_MAGIC:
            raise FormatError(f"{path}: not an embedding tensor file (bad magic {magic!r})")
        version, rows, cols, channels = np.frombuffer(fh.read(16), dtype="<u4")
        if version != TENSOR_VERSION:
            raise FormatError(f"{path}: unsupported tensor version {version}")
        data = np.frombuffer(fh.read(), dtype="<f4")
    expected = int(rows) * int(cols) * int(channels)
    if data.size != expected:
        raise FormatError(
            f"{path}: truncated tensor, expected {expected} values, got {data.size}"
        )
    arr = data.reshape(int(rows), int(cols), int(channels))
    return arr[:, 0, :] if cols == 1 else arr


# -- run-length encoding (column-major, starts with a run of zeros) ----------


def mask_to_rle(mask: np.ndarray) -> dict:
    flat = np.asarray(mask, dtype=np.uint8).flatten(order="F")
    if flat.size == 0:
        return {"size": list(mask.shape), "counts": []}
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    runs = np.diff(np.concatenate(([0], change, [flat.size])))
    counts = runs.tolist()
    if flat[0] == 1:
        counts = [0] + counts
    return {"size": [int(mask.shape[0]), int(mask.shape[1])], "counts": counts}


def rle_to_mask(rle: dict) -> np.ndarray:
    h, w = rle["size"]
    counts = rle["counts"]
    if sum(counts) != h * w:
        raise FormatError(f"RLE counts sum to {sum(counts)}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return flat.reshape((h, w), order="F")


# -- mask record files -------------------------------------------------------

MASK_RECORD_FIELDS = (
    "segmentation", "area", "bbox", "predicted_iou", "point_coords",
    "stability_score", "crop_box", "label", "label_id", "num_of_same_class",
    "color",
)


def save_mask_records(records: list[MaskRecord], path):
    payload = []
    for r in records:
        payload.append({
            "segmentation": mask_to_rle(r.segmentation),
            "area": r.area,
            "bbox": list(r.bbox),
            "predicted_iou": r.predicted_iou,
            "point_coords": r.point_coords,
            "stability_score": r.stability_score,
            "crop_box": list(r.crop_box) if r.crop_box else None,
            "label": r.label,
            "label_id": r.label_id,
            "num_of_same_class": r.num_of_same_class,
            "color": r.color,
        })
    Path(path).write_text(json.dumps(payload, indent=1))


def load_mask_set(path, expected_shape=None) -> tuple[MaskSet, list[str]]:
    """Read an external mask record file into a MaskSet. Returns the set
    plus validation warnings (empty list = fully schema-clean)."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: cannot read mask records: {exc}") from exc
    if not isinstance(payload, list):
        raise FormatError(f"{path}: mask record file must be a JSON array")
    warnings: list[str] = []
    masks, ious, stabs = [], [], []
    for i, entry in enumerate(payload):
        missing = [f for f in ("segmentation", "area", "bbox") if f not in entry]
        if missing:
            raise FormatError(f"{path}: record {i} missing fields {missing}")
        for f in MASK_RECORD_FIELDS:
            if f not in entry:
                warnings.append(f"record {i}: missing optional field {f!r}")
        mask = rle_to_mask(entry["segmentation"])
        if expected_shape is not None and mask.shape != tuple(expected_shape):
            raise FormatError(
                f"{path}: record {i} mask shape {mask.shape} does not match "
                f"grid {tuple(expected_shape)}"
            )
        if int(mask.sum()) != int(entry["area"]):
            warnings.append(f"record {i}: area {entry['area']} != mask sum {int(mask.sum())}")
        masks.append(mask)
        ious.append(float(entry.get("predicted_iou", 1.0)))
        stabs.append(float(entry.get("stability_score", 1.0)))
    return (
        MaskSet(masks=masks, provenance="external-file",
                predicted_ious=ious, stability_scores=stabs),
        warnings,
    )


# -- poses -------------------------------------------------------------------


def save_poses(poses: list[Pose], path):
    lines = []
    for p in poses:
        mat = np.hstack([p.rotation, p.translation[:, None]])
        lines.append(" ".join(repr(float(v)) for v in mat.reshape(-1)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_poses(path) -> list[Pose]:
    poses = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        values = [float(v) for v in line.split()]
        if len(values) != 12:
            raise FormatError(f"{path}:{n}: pose line needs 12 values, got {len(values)}")
        mat = np.array(values).reshape(3, 4)
        try:
            poses.append(Pose(mat[:, :3], mat[:, 3]))
        except ValueError as exc:
            raise FormatError(f"{path}:{n}: {exc}") from exc
    return poses


# -- run configuration -------------------------------------------------------


@dataclass
class RunConfig:
    grid: GridSpec = field(default_factory=lambda: GridSpec(500, 500))
    categories: list[str] = field(default_factory=list)
    colors: list[str] = field(default_factory=list)
    success_threshold_m: float = 1.0
    reject_threshold: float = 0.3
    inflation_radius_m: float = 0.15
    clearance_m: float = 0.5
    max_depth_m: float = 10.0
    min_mask_area: int = 4
    scenes: list[dict] = field(default_factory=list)
    translator: dict | None = None  # {"host": ..., "port": ...}


def load_config(path) -> RunConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise FormatError(f"{path}: cannot read config: {exc}") from exc
    cfg = RunConfig()
    if "grid" in raw:
        g = raw["grid"]
        cfg.grid = GridSpec(
            h_bar=int(g.get("h_bar", 500)),
            w_bar=int(g.get("w_bar", 500)),
            cell_size_s=float(g.get("cell_size_s", 0.05)),
            robot_height_h=float(g.get("robot_height_h", 1.5)),
        )
    cfg.categories = list(raw.get("categories", []))
    cfg.colors = list(raw.get("colors", []))
    th = raw.get("thresholds", {})
    cfg.success_threshold_m = float(th.get("success_m", 1.0))
    cfg.reject_threshold = float(th.get("reject", 0.3))
    cfg.inflation_radius_m = float(th.get("inflation_m", 0.15))
    cfg.clearance_m = float(th.get("clearance_m", 0.5))
    cfg.max_depth_m = float(th.get("max_depth_m", 10.0))
    cfg.min_mask_area = int(th.get("min_mask_area", 4))
    cfg.scenes = list(raw.get("scenes", []))
    cfg.translator = raw.get("translator")
    return cfg


# -- datasets ----------------------------------------------------------------


@dataclass
class Dataset:
    """On-disk dataset handle with everything build_map needs."""

    grid: GridSpec
    intrinsics: CameraIntrinsics
    category_vocab: Vocabulary
    color_vocab: Vocabulary
    category_embeddings: np.ndarray
    color_embeddings: np.ndarray
    frames: list[FrameInput]
    max_depth_m: float = 10.0
    ground_truth_npz: dict | None = None

    @property
    def embed_dim(self) -> int:
        return self.category_embeddings.shape[1]


def save_dataset(dataset, out_dir):
    """Write a dataset directory: manifest.json, rgb PNGs, depth npys,
    per-frame embedding tensors, poses.txt, label embedding tensors."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames_meta = []
    poses = []
    for i, frame in enumerate(dataset.frames):
        rgb_path = f"rgb_{i:05d}.png"
        depth_path = f"depth_{i:05d}.npy"
        emb_path = f"embed_{i:05d}.bevt"
        Image.fromarray(frame.rgb).save(out / rgb_path)
        np.save(out / depth_path, frame.depth.astype(np.float32))
        write_tensor(out / emb_path, frame.embedding_pixels)
        poses.append(frame.pose)
        frames_meta.append({"rgb": rgb_path, "depth": depth_path, "embedding": emb_path})
    save_poses(poses, out / "poses.txt")
    write_tensor(out / "category_embeddings.bevt", dataset.category_embeddings)
    write_tensor(out / "color_embeddings.bevt", dataset.color_embeddings)

    intr = dataset.intrinsics
    manifest = {
        "grid": {
            "h_bar": dataset.grid.h_bar,
            "w_bar": dataset.grid.w_bar,
            "cell_size_s": dataset.grid.cell_size_s,
            "robot_height_h": dataset.grid.robot_height_h,
        },
        "intrinsics": {
            "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
            "depth_scale": intr.depth_scale,
        },
        "max_depth_m": dataset.max_depth_m,
        "categories": list(dataset.category_vocab.labels),
        "colors": list(dataset.color_vocab.labels),
        "category_embeddings": "category_embeddings.bevt",
        "color_embeddings": "color_embeddings.bevt",
        "poses": "poses.txt",
        "frames": frames_meta,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))

    gt = getattr(dataset, "ground_truth", None)
    if gt is not None:
        np.savez_compressed(
            out / "ground_truth.npz",
            label_raster=gt.label_raster,
            color_raster=gt.color_raster,
            instance_raster=gt.instance_raster,
            rects=np.array(gt.rects, dtype=np.float64),
            heights=np.array(gt.heights, dtype=np.float64),
            centroid_cells=np.array(gt.centroid_cells, dtype=np.int64),
        )


def load_dataset(dataset_dir) -> Dataset:
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"{manifest_path}: manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: malformed manifest: {exc}") from exc

    g = manifest["grid"]
    grid = GridSpec(g["h_bar"], g["w_bar"], g["cell_size_s"], g["robot_height_h"])
    ic = manifest["intrinsics"]
    intr = CameraIntrinsics(ic["fx"], ic["fy"], ic["cx"], ic["cy"], ic["depth_scale"])
    category_vocab = Vocabulary(tuple(manifest["categories"]), "category")
    color_vocab = Vocabulary(tuple(manifest["colors"]), "color")
    cat_emb = read_tensor(root / manifest["category_embeddings"])
    col_emb = read_tensor(root / manifest["color_embeddings"])
    poses = load_poses(root / manifest["poses"])
    if len(poses) != len(manifest["frames"]):
        raise FormatError(
            f"{root}: {len(poses)} poses but {len(manifest['frames'])} frames"
        )

    frames = []
    for i, meta in enumerate(manifest["frames"]):
        for key in ("rgb", "depth", "embedding"):
            if not (root / meta[key]).exists():
                raise FormatError(f"{root / meta[key]}: referenced file missing")
        rgb = np.asarray(Image.open(root / meta["rgb"]).convert("RGB"))
        depth = np.load(root / meta["depth"])
        emb = read_tensor(root / meta["embedding"])
        frames.append(FrameInput(rgb, depth, poses[i], emb, intr))

    gt_npz = None
    gt_path = root / "ground_truth.npz"
    if gt_path.exists():
        with np.load(gt_path) as z:
            gt_npz = {k: z[k] for k in z.files}

    return Dataset(
        grid=grid,
        intrinsics=intr,
        category_vocab=category_vocab,
        color_vocab=color_vocab,
        category_embeddings=cat_emb,
        color_embeddings=col_emb,
        frames=frames,
        max_depth_m=float(manifest.get("max_depth_m", 10.0)),
        ground_truth_npz=gt_npz,
    )


# -- map archive -------------------------------------------------------------

_ARCHIVE_ARRAYS = (
    "bev_color", "height", "embedding_sum", "obs_count",
    "instance_ids", "color_ids", "pixel_labels", "pixel_similarity",
    "color_pixel_labels", "color_similarity", "occupancy",
)


def _array_digest(arrays: dict[str, np.ndarray], meta_json: str) -> str:
    digest = hashlib.sha256()
    for name in sorted(arrays):
        digest.update(name.encode())
        digest.update(str(arrays[name].dtype).encode())
        digest.update(str(arrays[name].shape).encode())
        digest.update(np.ascontiguousarray(arrays[name]).tobytes())
    digest.update(meta_json.encode())
    return digest.hexdigest()


def save_map(imap: InstanceMap, occupancy: np.ndarray, path, provenance: dict | None = None):
    bundle = imap.bundle
    arrays = {
        "bev_color": bundle.bev_color,
        "height": bundle.height,
        "embedding_sum": bundle.embedding_sum,
        "obs_count": bundle.obs_count,
        "instance_ids": imap.instance_ids,
        "color_ids": imap.color_ids,
        "pixel_labels": imap.pixel_labels.labels,
        "pixel_similarity": imap.pixel_labels.similarity,
        "color_pixel_labels": imap.color_pixel_labels.labels,
        "color_similarity": imap.color_pixel_labels.similarity,
        "occupancy": occupancy,
    }
    records = []
    for r in imap.records:
        records.append({
            "segmentation": mask_to_rle(r.segmentation),
            "area": r.area,
            "bbox": list(r.bbox),
            "predicted_iou": r.predicted_iou,
            "point_coords": r.point_coords,
            "stability_score": r.stability_score,
            "crop_box": list(r.crop_box) if r.crop_box else None,
            "label": r.label,
            "label_id": r.label_id,
            "num_of_same_class": r.num_of_same_class,
            "color": r.color,
            "score": r.score,
        })
    meta = {
        "version": ARCHIVE_VERSION,
        "tool_version": TOOL_VERSION,
        "grid": {
            "h_bar": bundle.grid.h_bar,
            "w_bar": bundle.grid.w_bar,
            "cell_size_s": bundle.grid.cell_size_s,
            "robot_height_h": bundle.grid.robot_height_h,
        },
        "categories": list(imap.category_vocab.labels),
        "colors": list(imap.color_vocab.labels),
        "records": records,
        "provenance": provenance or {},
    }
    meta_json = json.dumps(meta, sort_keys=True)
    checksum = _array_digest(arrays, meta_json)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("meta.json", meta_json)
        zf.writestr("checksum.txt", checksum)
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.save(buf, arr)
            zf.writestr(f"{name}.npy", buf.getvalue())


def load_map(path) -> tuple[InstanceMap, np.ndarray, dict]:
    """Load an archive; returns (instance map, occupancy, meta). The
    vocabulary carried inside the archive is authoritative."""
    try:
        with zipfile.ZipFile(path) as zf:
            meta_json = zf.read("meta.json").decode()
            stored_checksum = zf.read("checksum.txt").decode()
            arrays = {
                name: np.load(io.BytesIO(zf.read(f"{name}.npy")))
                for name in _ARCHIVE_ARRAYS
            }
    except (zipfile.BadZipFile, KeyError, OSError, ValueError) as exc:
        raise FormatError(f"{path}: unreadable or truncated archive: {exc}") from exc
    meta = json.loads(meta_json)
    if meta.get("version") != ARCHIVE_VERSION:
        raise FormatError(
            f"{path}: archive version {meta.get('version')} unsupported "
            f"(expected {ARCHIVE_VERSION})"
        )
    if _array_digest(arrays, meta_json) != stored_checksum:
        raise FormatError(f"{path}: checksum mismatch, archive corrupted")

    g = meta["grid"]
    grid = GridSpec(g["h_bar"], g["w_bar"], g["cell_size_s"], g["robot_height_h"])
    bundle = MapBundle(
        grid=grid,
        bev_color=arrays["bev_color"],
        height=arrays["height"],
        embedding_sum=arrays["embedding_sum"],
        obs_count=arrays["obs_count"],
    )
    records = []
    for entry in meta["records"]:
        records.append(MaskRecord(
            segmentation=rle_to_mask(entry["segmentation"]),
            area=entry["area"],
            bbox=tuple(entry["bbox"]),
            predicted_iou=entry["predicted_iou"],
            stability_score=entry["stability_score"],
            label=entry["label"],
            label_id=entry["label_id"],
            num_of_same_class=entry["num_of_same_class"],
            color=entry["color"],
            score=entry["score"],
            point_coords=entry.get("point_coords", []),
            crop_box=tuple(entry["crop_box"]) if entry.get("crop_box") else None,
        ))
    imap = InstanceMap(
        bundle=bundle,
        instance_ids=arrays["instance_ids"],
        color_ids=arrays["color_ids"],
        records=records,
        category_vocab=Vocabulary(tuple(meta["categories"]), "category"),
        color_vocab=Vocabulary(tuple(meta["colors"]), "color"),
        pixel_labels=PixelLabelMap(arrays["pixel_labels"], arrays["pixel_similarity"]),
        color_pixel_labels=PixelLabelMap(
            arrays["color_pixel_labels"], arrays["color_similarity"]
        ),
    )
    return imap, arrays["occupancy"], meta


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
