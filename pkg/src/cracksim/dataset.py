"""Batch generation with reproducible manifests.

Sample ``i`` of a dataset with global seed ``S`` is rendered from
``child_seed(S, i)`` and written as ``<id>_img.png``, ``<id>_gt.png``,
``<id>_normal.png`` and ``<id>_depth.png`` with ``id = f"{i:06d}"``.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .config import RunConfig
from .rng import child_seed
from .scene import SceneConfig, render_sample

SCHEMA_VERSION = "1.0"
MANIFEST_NAME = "manifest.json"
FILE_SUFFIXES = {"image": "_img.png", "gt": "_gt.png", "normal": "_normal.png", "depth": "_depth.png"}


def sample_id(index: int) -> str:
    return f"{index:06d}"


def write_sample(sample, out_dir, sid: str) -> dict:
    out_dir = Path(out_dir)
    files = {k: f"{sid}{suffix}" for k, suffix in FILE_SUFFIXES.items()}
    io.write_rgb_png(out_dir / files["image"], sample.image)
    io.write_mask_png(out_dir / files["gt"], sample.gt_mask)
    io.write_rgb_png(out_dir / files["normal"], sample.normal_map)
    io.write_gray16_png(out_dir / files["depth"], sample.depth_map)
    return files


def _generate_one(args):
    scene_dict, seed, sid, out_dir = args
    sample = render_sample(SceneConfig.from_dict(scene_dict), seed)
    files = write_sample(sample, out_dir, sid)
    return {"id": sid, "seed": seed, "files": files, "gt_pixels": int(sample.gt_mask.sum())}


def _run(tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_generate_one, tasks))
    return [_generate_one(t) for t in tasks]


def write_manifest(path, manifest: dict):
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    io.atomic_write_bytes(path, text.encode("utf-8"))


def generate_dataset(config: RunConfig, out_dir, count: int, seed: int, jobs: int = 1) -> dict:
    if count < 0:
        raise ValueError("count must be non-negative")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scene_dict = config.scene.to_dict()
    tasks = [(scene_dict, child_seed(seed, i), sample_id(i), str(out_dir)) for i in range(count)]
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "global_seed": int(seed),
        "seed_scheme": "splitmix64: child_seed(global_seed, index)",
        "config": config.to_dict(),
        "samples": _run(tasks, jobs),
    }
    write_manifest(out_dir / MANIFEST_NAME, manifest)
    return manifest


def read_manifest(path) -> dict:
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema {manifest.get('schema_version')!r}")
    ids = [s["id"] for s in manifest["samples"]]
    if len(set(ids)) != len(ids):
        raise ValueError("manifest sample ids are not unique")
    return manifest


def regenerate(manifest_path, out_dir, jobs: int = 1) -> dict:
    """Re-render every sample of a manifest from its stored config and seeds."""
    manifest = read_manifest(manifest_path)
    config = RunConfig.from_dict(manifest["config"])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scene_dict = config.scene.to_dict()
    tasks = [(scene_dict, int(s["seed"]), s["id"], str(out_dir)) for s in manifest["samples"]]
    new = dict(manifest, config=config.to_dict(), samples=_run(tasks, jobs))
    write_manifest(out_dir / MANIFEST_NAME, new)
    return new
