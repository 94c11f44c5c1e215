import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from cracksim.metrics import (
    CSV_COLUMNS, EmptyMaskError, MetricsParams, cl_dice, confusion, distance_transform, evaluate, f1,
    f1_tolerant, hausdorff, image_diagonal, parse_aggregate_cell, rbf_distance, skeletonize,
    write_metrics_csv,
)
from cracksim.segment import disk
from conftest import random_mask_pair
from oracles import (
    brute_cl_dice, brute_distance_transform, brute_f1, brute_f1_tolerant, brute_hausdorff,
    brute_rbf_hausdorff, zhang_suen_reference,
)

masks16 = arrays(np.bool_, (16, 16))


def single(shape, *pts):
    m = np.zeros(shape, bool)
    for r, c in pts:
        m[r, c] = True
    return m


def test_distance_transform_examples():
    m = single((8, 8), (0, 0))
    dt = distance_transform(m)
    assert dt[3, 4] == 5.0 and dt[0, 0] == 0
    assert np.all(np.isinf(distance_transform(np.zeros((4, 4), bool))))


def test_distance_transform_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = rng.random((16, 16)) < rng.uniform(0.01, 0.3)
        assert np.array_equal(distance_transform(m), brute_distance_transform(m))


def test_hausdorff_examples():
    x, y = single((8, 8), (0, 0)), single((8, 8), (3, 4))
    assert hausdorff(x, y) == 5.0
    assert hausdorff(x, y, "rbf") == pytest.approx(100 * (1 - math.exp(-25 / 200)))
    assert hausdorff(x, y, "rbf") == pytest.approx(11.7503, abs=1e-4)
    assert hausdorff(x, x) == 0 and hausdorff(x, x, "rbf") == 0
    with pytest.raises(ValueError):
        hausdorff(x, np.zeros((4, 4), bool))


def test_hausdorff_empty_policies():
    e = np.zeros((8, 8), bool)
    x = single((8, 8), (2, 2))
    assert hausdorff(e, e) == 0.0
    assert hausdorff(x, e) == image_diagonal((8, 8)) == math.hypot(7, 7)
    assert hausdorff(x, e, "rbf") == pytest.approx(float(rbf_distance(math.hypot(7, 7), MetricsParams())))
    with pytest.raises(EmptyMaskError):
        hausdorff(x, e, params=MetricsParams(empty_set_policy="error"))


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(1)
    p = MetricsParams()
    for _ in range(200):
        x, y = random_mask_pair(rng)
        assert hausdorff(x, y) == brute_hausdorff(x, y)
        assert abs(hausdorff(x, y, "rbf", p) - brute_rbf_hausdorff(x, y, 10.0, 100.0)) < 1e-9


def test_skeleton_of_thin_line_unchanged():
    m = np.zeros((9, 20), bool)
    m[4, 3:17] = True
    assert np.array_equal(skeletonize(m), m)
    assert not skeletonize(np.zeros((5, 5), bool)).any()


def test_skeleton_of_filled_block_golden():
    m = np.zeros((9, 9), bool)
    m[2:7, 2:7] = True
    golden = single((9, 9), (4, 4))
    assert np.array_equal(zhang_suen_reference(m), golden)
    assert np.array_equal(skeletonize(m), golden)


def test_skeleton_matches_reference_and_is_idempotent():
    rng = np.random.default_rng(2)
    for _ in range(40):
        m = ndimage.binary_dilation(rng.random((20, 20)) < 0.05, disk(rng.integers(1, 3)))
        s = skeletonize(m)
        assert np.array_equal(s, zhang_suen_reference(m))
        assert np.array_equal(skeletonize(s), s)
        assert not np.any(s & ~m)


def test_cl_dice_examples():
    line = np.zeros((16, 16), bool)
    line[8, 2:14] = True
    assert cl_dice(line, line) == 1.0
    assert cl_dice(line, np.roll(line, 4, axis=0)) == 0.0
    thick = ndimage.binary_dilation(line, disk(1))
    # skeleton of the dilated band is row 8, x in [3, 12]: 10 pixels, all on the line,
    # and the line's own skeleton (12 pixels) lies inside the band
    s_thick = skeletonize(thick)
    assert s_thick.sum() == 10 and (s_thick & line).sum() == 10
    assert cl_dice(line, thick) == 1.0
    # a partial prediction: left half of the line
    half = line.copy()
    half[8, 8:] = False
    # T_prec = 1, T_sens = 6/12 -> 2 * 0.5 / 1.5
    assert cl_dice(line, half) == pytest.approx(2 / 3)


def test_cl_dice_empty_conventions():
    e = np.zeros((8, 8), bool)
    x = single((8, 8), (3, 3))
    assert cl_dice(e, e) == 1.0
    assert cl_dice(x, e) == 0.0 and cl_dice(e, x) == 0.0


def test_cl_dice_matches_direct_formula():
    rng = np.random.default_rng(3)
    for _ in range(200):
        gt, pred = random_mask_pair(rng)
        s_gt, s_pred = skeletonize(gt), skeletonize(pred)
        assert abs(cl_dice(gt, pred) - brute_cl_dice(gt, pred, s_gt, s_pred)) < 1e-9


def test_f1_examples():
    gt = np.ones((2, 2), bool)
    pred = np.array([[1, 1], [0, 0]], bool)
    assert confusion(gt, pred) == (2, 0, 2)
    assert f1(gt, pred) == 2 / 3
    assert f1(gt, gt) == 1.0
    e = np.zeros((2, 2), bool)
    assert f1(e, e) == 1.0 and f1(gt, e) == 0.0


def test_f1_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(200):
        gt, pred = random_mask_pair(rng)
        assert f1(gt, pred) == brute_f1(gt, pred)


def test_f1_tolerant_examples():
    assert f1_tolerant(single((16, 16), (5, 5)), single((16, 16), (6, 5)), 10) == 1.0
    assert f1_tolerant(single((16, 16), (0, 0)), single((16, 16), (0, 12)), 10) == 0.0
    assert f1_tolerant(single((16, 16), (0, 0)), single((16, 16), (6, 8)), 10) == 1.0
    with pytest.raises(ValueError):
        f1_tolerant(single((4, 4), (0, 0)), single((4, 4), (0, 0)), -1)


def test_f1_tolerant_matches_brute_force_and_reduces_to_f1():
    rng = np.random.default_rng(5)
    for _ in range(200):
        gt, pred = random_mask_pair(rng)
        theta = int(rng.integers(0, 5))
        assert f1_tolerant(gt, pred, theta) == brute_f1_tolerant(gt, pred, theta)
        assert f1_tolerant(gt, pred, 0) == f1(gt, pred)


def test_evaluate_identity_and_empty_prediction():
    m = np.zeros((32, 32), bool)
    m[10, 4:28] = True
    m[11:20, 15] = True
    r = evaluate(m, m)
    assert (r.f1, r.f1_theta, r.cl_dice, r.hdf_euc, r.hdf_rbf) == (1.0, 1.0, 1.0, 0.0, 0.0)
    r = evaluate(m, np.zeros_like(m))
    assert r.f1 == 0 and r.cl_dice == 0 and r.f1_theta == 0
    assert r.hdf_euc == image_diagonal(m.shape)
    assert r.hdf_rbf == pytest.approx(float(rbf_distance(r.hdf_euc, MetricsParams())))
    assert (r.tp, r.fp, r.fn) == (0, 0, int(m.sum()))


def test_csv_schema():
    rng = np.random.default_rng(6)
    rows = [evaluate(*random_mask_pair(rng)).as_row(f"s{i}") for i in range(3)]
    buf = io.StringIO()
    write_metrics_csv(buf, rows)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 5 and lines[-1].startswith("aggregate,")
    mean, std = parse_aggregate_cell(lines[-1].split(",")[1])
    f1s = [r["f1"] for r in rows]
    assert mean == pytest.approx(np.mean(f1s), abs=1e-6) and std == pytest.approx(np.std(f1s, ddof=1), abs=1e-6)
    for line in lines[1:-1]:
        cells = line.split(",")
        assert all(float(c) >= 0 for c in cells[1:])


@settings(max_examples=60, deadline=None)
@given(masks16, masks16)
def test_symmetry_and_bounds(a, b):
    p = MetricsParams()
    assert hausdorff(a, b) == hausdorff(b, a)
    assert f1(a, b) == f1(b, a)
    assert f1_tolerant(a, b, 3) == f1_tolerant(b, a, 3)
    r = evaluate(a, b, p)
    for v in (r.f1, r.f1_theta, r.cl_dice):
        assert 0.0 <= v <= 1.0
    assert 0.0 <= r.hdf_euc <= image_diagonal(a.shape)
    assert 0.0 <= r.hdf_rbf < p.rbf_scale
    assert r.f1 <= r.f1_theta


@settings(max_examples=60, deadline=None)
@given(masks16, masks16)
def test_tolerance_monotone(a, b):
    values = [f1_tolerant(a, b, t) for t in range(0, 8)]
    assert all(x <= y for x, y in zip(values, values[1:]))


@given(st.floats(0, 50), st.floats(0, 50))
def test_rbf_monotone_in_distance(d1, d2):
    lo, hi = sorted((d1, d2))
    p = MetricsParams()
    assert rbf_distance(lo, p) <= rbf_distance(hi, p)


def test_hausdorff_translation_invariance():
    rng = np.random.default_rng(7)
    for _ in range(50):
        a = np.zeros((40, 40), bool)
        b = np.zeros((40, 40), bool)
        a[10:20, 10:20] = rng.random((10, 10)) < 0.3
        b[10:20, 10:20] = rng.random((10, 10)) < 0.3
        if not a.any() or not b.any():
            continue
        shifted = hausdorff(np.roll(a, (7, -5), (0, 1)), np.roll(b, (7, -5), (0, 1)))
        assert shifted == hausdorff(a, b)
