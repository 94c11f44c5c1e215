"""Command-line entry point: ``cracksim generate|affinity|segment|evaluate``.

Exit codes: 0 success, 1 usage or configuration error, 2 partial batch failure.
The default worker count comes from ``CRACKSIM_JOBS`` (fallback 1).
"""

import argparse
import json
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import load_config
from .dataset import generate_dataset, regenerate
from .metrics import evaluate, write_metrics_csv
from .pmi import affinity_map, to_luminance
from .rng import child_seed, make_rng
from .segment import segment_by_affinity

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2
JOBS_ENV = "CRACKSIM_JOBS"
ID_SUFFIXES = ("_img", "_aff", "_gt", "_pred")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def stem_id(path) -> str:
    stem = Path(path).stem
    for suffix in ID_SUFFIXES:
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def image_seed(seed: int, path) -> int:
    """Per-image PMI seed; depends only on the global seed and the file stem."""
    return child_seed(seed, zlib.crc32(Path(path).stem.encode("utf-8")))


def collect_inputs(inputs, preferred_suffix: str, extensions=(".png",)):
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            candidates = sorted(q for q in p.iterdir() if q.suffix.lower() in extensions)
            preferred = [q for q in candidates if q.stem.endswith(preferred_suffix)]
            files.extend(preferred or candidates)
        else:
            files.append(p)
    return files


def _run_batch(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# -- generate ---------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.manifest:
        manifest = regenerate(args.manifest, args.out, jobs=args.jobs)
    else:
        config = load_config(args.config)
        manifest = generate_dataset(config, args.out, args.count, args.seed, jobs=args.jobs)
    print(f"wrote {len(manifest['samples'])} samples to {args.out}")
    return EXIT_OK


# -- affinity ---------------------------------------------------------------

def _affinity_one(task):
    path, out_dir, seed, pmi = task
    try:
        gray = to_luminance(io.read_image(path))
        aff = affinity_map(gray, pmi, make_rng(image_seed(seed, path)))
        base = Path(out_dir) / f"{stem_id(path)}_aff"
        io.write_gray16_png(base.with_suffix(".png"), io.affinity_preview(aff))
        io.write_affinity_raw(base.with_suffix(".f32"), aff)
        stats = {"source": str(path), "seed": int(seed), "min": float(aff.min()),
                 "max": float(aff.max()), "global_median": float(np.median(aff))}
        gt_path = Path(path).with_name(f"{stem_id(path)}_gt.png")
        if gt_path.exists():
            gt = io.read_mask(gt_path)
            if gt.shape == aff.shape and gt.any():
                stats["mask_median"] = float(np.median(aff[gt]))
                stats["mask_below_global"] = stats["mask_median"] < stats["global_median"]
        io.atomic_write_bytes(base.with_suffix(".json"),
                              (json.dumps(stats, indent=2, sort_keys=True) + "\n").encode("utf-8"))
        return None
    except Exception as exc:  # per-file failure; the batch continues
        return f"{path}: {exc}"


def cmd_affinity(args) -> int:
    config = load_config(args.config)
    files = collect_inputs(args.inputs, "_img")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    tasks = [(str(f), args.out, args.seed, config.pmi) for f in files]
    errors = [e for e in _run_batch(_affinity_one, tasks, args.jobs) if e]
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    print(f"affinity: {len(files) - len(errors)} ok, {len(errors)} failed")
    return EXIT_PARTIAL if errors else EXIT_OK


# -- segment ----------------------------------------------------------------

def _segment_one(task):
    path, out_dir, seed, pmi, seg = task
    try:
        if Path(path).suffix.lower() == ".f32":
            aff = io.read_affinity_raw(path)
        else:
            aff = affinity_map(to_luminance(io.read_image(path)), pmi, make_rng(image_seed(seed, path)))
        io.write_mask_png(Path(out_dir) / f"{stem_id(path)}_pred.png", segment_by_affinity(aff, seg))
        return None
    except Exception as exc:
        return f"{path}: {exc}"


def cmd_segment(args) -> int:
    config = load_config(args.config).with_overrides(quantile=args.quantile)
    files = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            raw = sorted(p.glob("*.f32"))
            files.extend(raw or collect_inputs([p], "_img"))
        else:
            files.append(p)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    tasks = [(str(f), args.out, args.seed, config.pmi, config.segmenter) for f in files]
    errors = [e for e in _run_batch(_segment_one, tasks, args.jobs) if e]
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    print(f"segment: {len(files) - len(errors)} ok, {len(errors)} failed")
    return EXIT_PARTIAL if errors else EXIT_OK


# -- evaluate ---------------------------------------------------------------

def find_prediction(pred_dir: Path, sid: str):
    for name in (f"{sid}_pred.png", f"{sid}_gt.png", f"{sid}.png"):
        if (pred_dir / name).exists():
            return pred_dir / name
    return None


def _evaluate_one(task):
    sid, gt_path, pred_path, params = task
    return evaluate(io.read_mask(gt_path), io.read_mask(pred_path), params).as_row(sid)


def cmd_evaluate(args) -> int:
    config = load_config(args.config).with_overrides(theta=args.theta)
    gt_dir, pred_dir = Path(args.gt_dir), Path(args.pred_dir)
    if not gt_dir.is_dir() or not pred_dir.is_dir():
        raise UsageError("gt and pred must be directories")
    tasks, missing = [], []
    for gt_path in collect_inputs([gt_dir], "_gt"):
        sid = stem_id(gt_path)
        pred_path = find_prediction(pred_dir, sid)
        if pred_path is None:
            missing.append(sid)
        else:
            tasks.append((sid, str(gt_path), str(pred_path), config.metrics))
    rows = _run_batch(_evaluate_one, tasks, args.jobs)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(args.out, rows)
    for sid in missing:
        print(f"error: no prediction for {sid}", file=sys.stderr)
    print(f"evaluate: {len(rows)} pairs scored, {len(missing)} missing -> {args.out}")
    return EXIT_PARTIAL if missing else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cracksim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--jobs", type=int, default=default_jobs(), help=f"worker processes (env {JOBS_ENV})")
    common.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("generate", parents=[common], help="render a synthetic crack dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--manifest", help="re-render the samples of an existing manifest")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("affinity", parents=[common], help="compute PMI affinity maps")
    a.add_argument("inputs", nargs="+", help="images or dataset directories")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_affinity)

    s = sub.add_parser("segment", parents=[common], help="threshold affinity maps into crack masks")
    s.add_argument("inputs", nargs="+", help=".f32 affinity files, images, or directories")
    s.add_argument("--out", required=True)
    s.add_argument("--quantile", type=float)
    s.set_defaults(func=cmd_segment)

    e = sub.add_parser("evaluate", parents=[common], help="score predicted masks against ground truth")
    e.add_argument("gt_dir")
    e.add_argument("pred_dir")
    e.add_argument("--out", required=True, help="CSV output path")
    e.add_argument("--theta", type=int)
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
