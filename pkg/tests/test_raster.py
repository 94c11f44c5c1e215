import math

import numpy as np
import pytest
from scipy import ndimage

from cracksim.fractal import FractalParams, generate_crack_polyline
from cracksim.raster import (
    PlacementParams, draw_polyline, gaussian_blur, gaussian_kernel1d, place_polyline,
    render_crack_layer, to_mask,
)
from cracksim.rng import child_seed, make_rng

STRAIGHT = np.array([[0.0, 0.0], [1.0, 0.0]])


def fixed(kernel, rotation=0.0):
    return PlacementParams(rotation_range=(rotation, rotation), blur_kernel_choices=(kernel,))


def test_placement_validation():
    with pytest.raises(ValueError):
        PlacementParams(blur_kernel_choices=(4,))
    with pytest.raises(ValueError):
        PlacementParams(blur_kernel_choices=())
    with pytest.raises(ValueError):
        PlacementParams(margin_frac=0.5)
    with pytest.raises(ValueError):
        PlacementParams(mask_threshold=1.0)


def test_kernel_sigma_is_size_over_six():
    k = gaussian_kernel1d(5)
    sigma = 5 / 6
    expected = np.exp(-0.5 * (np.arange(-2, 3) / sigma) ** 2)
    assert np.allclose(k, expected / expected.sum())
    assert k.sum() == pytest.approx(1.0)


def test_canvas_minimum():
    with pytest.raises(ValueError, match="canvas below minimum"):
        render_crack_layer(STRAIGHT, (31, 64), PlacementParams(), make_rng(0))


def test_horizontal_stroke_peaks_on_drawn_row():
    layer, stroke, k = render_crack_layer(STRAIGHT, (64, 64), fixed(3), make_rng(0), return_stroke=True)
    assert k == 3
    drawn_rows = np.nonzero(stroke.max(axis=1) > 0)[0]
    peak_row = int(np.argmax(layer.max(axis=1)))
    assert peak_row in drawn_rows
    cols = np.nonzero(stroke.max(axis=0) > 0)[0]
    # interior columns: the row-wise maximum lies on the drawn centerline row
    for c in cols[3:-3]:
        assert np.argmax(layer[:, c]) in drawn_rows


@pytest.mark.parametrize("kernel", [3, 5])
def test_blur_support_bounded_by_half_kernel(kernel):
    pts = generate_crack_polyline(FractalParams(depth=4), 5)
    layer, stroke, k = render_crack_layer(pts, (96, 96), PlacementParams(blur_kernel_choices=(kernel,)),
                                          make_rng(3), return_stroke=True)
    reach = ndimage.binary_dilation(stroke > 0, np.ones((kernel, kernel), bool))
    assert not np.any((layer > 0) & ~reach)


def test_render_is_deterministic():
    pts = generate_crack_polyline(FractalParams(depth=6), 11)
    a = render_crack_layer(pts, (128, 128), PlacementParams(), make_rng(4))
    b = render_crack_layer(pts, (128, 128), PlacementParams(), make_rng(4))
    assert a.tobytes() == b.tobytes()
    assert a.max() == 1.0 and a.min() >= 0.0


def test_placement_respects_margin():
    pts = generate_crack_polyline(FractalParams(depth=5), 2)
    placement = PlacementParams(margin_frac=0.1)
    for s in range(20):
        placed = place_polyline(pts, (200, 100), placement, make_rng(s))
        assert placed[:, 0].min() >= 0.1 * 199 - 1e-9 and placed[:, 0].max() <= 0.9 * 199 + 1e-9
        assert placed[:, 1].min() >= 0.1 * 99 - 1e-9 and placed[:, 1].max() <= 0.9 * 99 + 1e-9


def test_blur_conserves_mass_for_interior_strokes():
    stroke = draw_polyline(np.array([[20.0, 30.3], [70.0, 52.8], [40.0, 80.0]]), (100, 100))
    for k in (3, 5, 7):
        blurred = gaussian_blur(stroke, k)
        assert blurred.sum() == pytest.approx(stroke.sum(), rel=1e-6)


def test_to_mask_basics():
    assert not to_mask(np.zeros((8, 8)), 0.5).any()
    img = np.zeros((8, 8))
    img[3, 4] = 1.0
    m = to_mask(img, 0.5)
    assert m.sum() == 1 and m[3, 4]
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            to_mask(img, bad)


def test_blurred_horizontal_stroke_mask_width():
    # 1-D profile of the kernel-5 blur relative to the center tap:
    # offsets 0, 1, 2 give 1.0, exp(-0.72) ~= 0.487, exp(-2.88) ~= 0.056
    k = gaussian_kernel1d(5)
    profile = k / k[2]
    assert profile[1] == pytest.approx(math.exp(-0.72)) and profile[1] < 0.5
    for y in (20.0, 20.25, 20.5):
        pts = np.array([[0.0, y], [1.0, y]])
        layer = render_crack_layer(pts, (64, 64), fixed(5), make_rng(0))
        m = to_mask(layer, 0.5)
        widths = m.sum(axis=0)
        cols = np.nonzero(widths)[0]
        assert np.all((widths[cols[2:-2]] >= 1) & (widths[cols[2:-2]] <= 3))


def test_generated_cracks_visible_and_connected():
    fp, pl = FractalParams(), PlacementParams()
    single = 0
    for s in range(100):
        pts = generate_crack_polyline(fp, child_seed(s, 1))
        m = to_mask(render_crack_layer(pts, (256, 256), pl, make_rng(child_seed(s, 2))))
        assert m.sum() > 0
        single += ndimage.label(m, structure=np.ones((3, 3)))[1] == 1
    assert single >= 99
