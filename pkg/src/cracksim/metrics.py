"""Segmentation scores for thin structures.

F1, tolerance F1, clDice and the bidirectional Hausdorff distance under a
Euclidean and an RBF-derived pixel distance.  Masks are boolean arrays;
point sets are the coordinates of their set pixels.
"""

import csv
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

CSV_COLUMNS = ["id", "f1", "f1_theta", "cl_dice", "hdf_euc", "hdf_rbf", "tp", "fp", "fn"]
METRIC_COLUMNS = CSV_COLUMNS[1:]
EMPTY_POLICIES = ("max_diagonal", "error")


class EmptyMaskError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsParams:
    theta: int = 10
    rbf_lengthscale: float = 10.0
    rbf_scale: float = 100.0
    empty_set_policy: str = "max_diagonal"

    def __post_init__(self):
        if int(self.theta) != self.theta or self.theta < 0:
            raise ValueError("theta must be a non-negative integer")
        if not (self.rbf_lengthscale > 0 and self.rbf_scale > 0):
            raise ValueError("rbf_lengthscale and rbf_scale must be positive")
        if self.empty_set_policy not in EMPTY_POLICIES:
            raise ValueError(f"empty_set_policy must be one of {EMPTY_POLICIES}")


@dataclass
class MetricsReport:
    f1: float
    f1_theta: float
    cl_dice: float
    hdf_euc: float
    hdf_rbf: float
    tp: int
    fp: int
    fn: int
    gt_skeleton_px: int
    pred_skeleton_px: int

    def as_row(self, sample_id: str) -> dict:
        d = asdict(self)
        return {"id": sample_id, **{k: d[k] for k in METRIC_COLUMNS}}


def _check_pair(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a, b


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest set pixel.

    An empty mask yields +inf everywhere.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(~mask)


def rbf_distance(d, params: MetricsParams):
    """rbf_scale * (1 - exp(-d**2 / (2 l**2))): 0 at d = 0, increasing, below rbf_scale."""
    d = np.asarray(d, dtype=np.float64)
    return params.rbf_scale * -np.expm1(-(d * d) / (2.0 * params.rbf_lengthscale**2))


def image_diagonal(shape) -> float:
    h, w = shape
    return math.hypot(h - 1, w - 1)


def _hausdorff_euclidean(x, y, dt_x=None, dt_y=None, policy="max_diagonal"):
    nx, ny = x.any(), y.any()
    if not nx and not ny:
        return 0.0
    if nx != ny:
        if policy == "error":
            raise EmptyMaskError("exactly one mask is empty")
        return image_diagonal(x.shape)
    dt_x = distance_transform(x) if dt_x is None else dt_x
    dt_y = distance_transform(y) if dt_y is None else dt_y
    return float(max(dt_y[x].max(), dt_x[y].max()))


def hausdorff(x, y, measure: str = "euclidean", params: MetricsParams = MetricsParams()) -> float:
    """Bidirectional Hausdorff distance between the set pixels of two masks.

    Since the RBF distance is monotone in Euclidean distance, the RBF variant
    is the RBF distance of the Euclidean one.
    """
    x, y = _check_pair(x, y)
    if measure not in ("euclidean", "rbf"):
        raise ValueError(f"unknown measure {measure!r}")
    d = _hausdorff_euclidean(x, y, policy=params.empty_set_policy)
    return d if measure == "euclidean" else float(rbf_distance(d, params))


# Zhang-Suen neighbor order P2..P9: N, NE, E, SE, S, SW, W, NW as (dy, dx).
_NEIGHBORS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning (1984), both sub-iterations until nothing changes."""
    img = np.pad(np.asarray(mask, dtype=bool), 1).astype(np.uint8)
    h, w = img.shape

    def neighbors():
        return [img[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx] for dy, dx in _NEIGHBORS]

    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            p2, p3, p4, p5, p6, p7, p8, p9 = neighbors()
            seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
            b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
            a = sum(((seq[k] == 0) & (seq[k + 1] == 1)).astype(np.uint8) for k in range(8))
            if step == 0:
                c1 = p2 * p4 * p6
                c2 = p4 * p6 * p8
            else:
                c1 = p2 * p4 * p8
                c2 = p2 * p6 * p8
            center = img[1:-1, 1:-1]
            delete = (center == 1) & (b >= 2) & (b <= 6) & (a == 1) & (c1 == 0) & (c2 == 0)
            if delete.any():
                center[delete] = 0
                changed = True
    return img[1:-1, 1:-1].astype(bool)


def _topology_term(skel, other, other_mask_nonempty):
    n = int(skel.sum())
    if n == 0:
        return 1.0 if not other_mask_nonempty else 0.0
    return int((skel & other).sum()) / n


def cl_dice(gt: np.ndarray, pred: np.ndarray, skeletons=None) -> float:
    """Harmonic mean of topology precision and sensitivity.

    An empty skeleton scores 1 if the other mask is also empty, else 0.
    """
    gt, pred = _check_pair(gt, pred)
    s_gt, s_pred = skeletons if skeletons is not None else (skeletonize(gt), skeletonize(pred))
    t_prec = _topology_term(s_pred, gt, gt.any())
    t_sens = _topology_term(s_gt, pred, pred.any())
    if t_prec + t_sens == 0:
        return 0.0
    return 2.0 * t_prec * t_sens / (t_prec + t_sens)


def confusion(gt, pred):
    gt, pred = _check_pair(gt, pred)
    tp = int(np.count_nonzero(gt & pred))
    fp = int(np.count_nonzero(~gt & pred))
    fn = int(np.count_nonzero(gt & ~pred))
    return tp, fp, fn


def f1(gt: np.ndarray, pred: np.ndarray) -> float:
    tp, fp, fn = confusion(gt, pred)
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def _f1_from_matches(tp_pred, n_pred, tp_gt, n_gt):
    # 2PR/(P+R) with P = tp_pred/n_pred, R = tp_gt/n_gt, kept in integers until one division
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    den = tp_pred * n_gt + tp_gt * n_pred
    if den == 0:
        return 0.0
    return 2 * tp_pred * tp_gt / den


def f1_tolerant(gt: np.ndarray, pred: np.ndarray, theta: int = 10, dt_gt=None, dt_pred=None) -> float:
    """F1 where a pixel counts as matched if the other mask has a pixel within ``theta``."""
    gt, pred = _check_pair(gt, pred)
    if theta < 0:
        raise ValueError("theta must be non-negative")
    dt_gt = distance_transform(gt) if dt_gt is None else dt_gt
    dt_pred = distance_transform(pred) if dt_pred is None else dt_pred
    tp_pred = int(np.count_nonzero(dt_gt[pred] <= theta))
    tp_gt = int(np.count_nonzero(dt_pred[gt] <= theta))
    return _f1_from_matches(tp_pred, int(pred.sum()), tp_gt, int(gt.sum()))


def evaluate(gt: np.ndarray, pred: np.ndarray, params: MetricsParams = MetricsParams()) -> MetricsReport:
    gt, pred = _check_pair(gt, pred)
    dt_gt, dt_pred = distance_transform(gt), distance_transform(pred)
    s_gt, s_pred = skeletonize(gt), skeletonize(pred)
    tp, fp, fn = confusion(gt, pred)
    hdf = _hausdorff_euclidean(gt, pred, dt_gt, dt_pred, params.empty_set_policy)
    return MetricsReport(
        f1=f1(gt, pred),
        f1_theta=f1_tolerant(gt, pred, params.theta, dt_gt, dt_pred),
        cl_dice=cl_dice(gt, pred, (s_gt, s_pred)),
        hdf_euc=hdf,
        hdf_rbf=float(rbf_distance(hdf, params)),
        tp=tp, fp=fp, fn=fn,
        gt_skeleton_px=int(s_gt.sum()),
        pred_skeleton_px=int(s_pred.sum()),
    )


def aggregate(rows) -> dict:
    """Mean and sample standard deviation per metric, formatted ``mean±std``."""
    out = {"id": "aggregate"}
    for col in METRIC_COLUMNS:
        vals = np.array([float(r[col]) for r in rows], dtype=np.float64)
        if len(vals) == 0:
            out[col] = "nan±nan"
            continue
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else float("nan")
        out[col] = f"{float(np.mean(vals)):.6f}±{std:.6f}"
    return out


def format_row(row: dict) -> dict:
    out = {}
    for col in CSV_COLUMNS:
        v = row[col]
        out[col] = f"{v:.6f}" if isinstance(v, float) else str(v)
    return out


def write_metrics_csv(path_or_file, rows, with_aggregate: bool = True):
    """One row per pair, then an optional ``aggregate`` row; UTF-8, '.' decimals."""
    rows = list(rows)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(format_row(r))
        if with_aggregate:
            writer.writerow(aggregate(rows))
    finally:
        if own:
            fh.close()


def parse_aggregate_cell(cell: str):
    mean, std = cell.split("±")
    return float(mean), float(std)
