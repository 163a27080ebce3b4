"""End-to-end check of the TypeScript export tool in frontend/ against the
engine's loaders: every file it emits must load with zero warnings and an
engine build over the exported files must complete.

Requires the frontend to be built (``npm install && npm run build`` in
frontend/); skipped otherwise so the engine suite stays self-contained.
"""

import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from bevnav import formats, pipeline
from bevnav.scenes import COLOR_RGB, generate_scene

from conftest import demo_spec

FRONTEND_CLI = Path(__file__).resolve().parent.parent / "frontend" / "dist" / "cli.js"

pytestmark = pytest.mark.skipif(
    not FRONTEND_CLI.exists() or shutil.which("node") is None,
    reason="frontend not built (run npm install && npm run build in frontend/)",
)


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    """Dataset dir whose embedding tensors and mask records were produced
    by the frontend export tool instead of the scene generator."""
    from bevnav.geometry import GridSpec

    root = tmp_path_factory.mktemp("export")
    data = root / "data"
    dataset = generate_scene(demo_spec(grid=GridSpec(160, 160)))
    formats.save_dataset(dataset, data)

    # top-down raster for the segmenter: build once with the generator's
    # own embeddings, then hand the engine's color raster to the tool
    built = pipeline.build_map(formats.load_dataset(data))
    Image.fromarray(built.imap.bundle.bev_color).save(root / "bev.png")

    job = {
        "manifest": "data/manifest.json",
        "outputDir": "data",
        "embedDim": 16,
        "palette": {name: list(rgb) for name, rgb in COLOR_RGB.items()},
        "bevImage": "bev.png",
        "minMaskArea": 4,
    }
    (root / "job.json").write_text(json.dumps(job))
    proc = subprocess.run(
        ["node", str(FRONTEND_CLI), str(root / "job.json")],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    return root


class TestExportedFilesPassEngineValidation:
    def test_frame_tensors_load_and_match_image_shape(self, exported):
        manifest = json.loads((exported / "data" / "manifest.json").read_text())
        for meta in manifest["frames"]:
            emb = formats.read_tensor(exported / "data" / meta["embedding"])
            rgb = np.asarray(Image.open(exported / "data" / meta["rgb"]))
            assert emb.shape == (rgb.shape[0], rgb.shape[1], 16)
            norms = np.linalg.norm(emb, axis=-1)
            assert np.allclose(norms, 1.0, atol=1e-5)

    def test_label_tensors_have_one_row_per_label(self, exported):
        manifest = json.loads((exported / "data" / "manifest.json").read_text())
        cats = formats.read_tensor(exported / "data" / manifest["category_embeddings"])
        cols = formats.read_tensor(exported / "data" / manifest["color_embeddings"])
        assert cats.shape == (len(manifest["categories"]), 16)
        assert cols.shape == (len(manifest["colors"]), 16)

    def test_mask_records_load_with_zero_warnings(self, exported):
        mask_set, warnings = formats.load_mask_set(
            exported / "data" / "masks.json", expected_shape=(160, 160)
        )
        assert warnings == []
        assert len(mask_set.masks) == len(demo_spec().objects)
        assert mask_set.provenance == "external-file"

    def test_semantic_fields_are_left_for_the_engine(self, exported):
        records = json.loads((exported / "data" / "masks.json").read_text())
        for record in records:
            assert record["label"] == ""
            assert record["color"] == ""
            assert record["label_id"] == 0
            assert record["num_of_same_class"] == 0


class TestEngineBuildOverExportedFiles:
    def test_build_completes_with_external_masks_and_embeddings(self, exported):
        dataset = formats.load_dataset(exported / "data")
        assert dataset.embed_dim == 16
        mask_set, warnings = formats.load_mask_set(
            exported / "data" / "masks.json", expected_shape=(160, 160)
        )
        assert warnings == []
        built = pipeline.build_map(dataset, mask_set=mask_set)
        assert len(built.imap.records) == len(mask_set.masks)
        # palette-grounded model: color assignment is exact on every instance
        expected_colors = sorted(o.color for o in demo_spec().objects)
        assert sorted(r.color for r in built.imap.records) == expected_colors
