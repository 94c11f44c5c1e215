"""Placing a crack centerline on a pixel canvas and giving it width.

Pixel (row i, column j) has its center at canvas coordinate (x=j, y=i).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fractal import validate_polyline

MIN_CANVAS = 32
# Arc-length spacing (pixels) used when sampling the centerline for coverage.
SAMPLE_STEP = 0.1


@dataclass(frozen=True)
class PlacementParams:
    rotation_range: tuple = (0.0, 2.0 * math.pi)
    margin_frac: float = 0.05
    blur_kernel_choices: tuple = (3, 5)
    mask_threshold: float = 0.5
    # major axis as a fraction of the smaller canvas side
    scale_range: tuple = (0.4, 0.9)

    def __post_init__(self):
        lo, hi = self.rotation_range
        if hi < lo:
            raise ValueError("rotation_range must be (low, high) with low <= high")
        if not 0.0 <= self.margin_frac < 0.5:
            raise ValueError("margin_frac must lie in [0, 0.5)")
        ks = tuple(self.blur_kernel_choices)
        if not ks or any(int(k) != k or k < 1 or k % 2 == 0 for k in ks):
            raise ValueError("blur_kernel_choices must be non-empty odd positive integers")
        if not 0.0 < self.mask_threshold < 1.0:
            raise ValueError("mask_threshold must lie in (0, 1)")
        slo, shi = self.scale_range
        if not 0.0 < slo <= shi <= 1.0:
            raise ValueError("scale_range must satisfy 0 < low <= high <= 1")


def gaussian_kernel1d(size: int) -> np.ndarray:
    """Normalized Gaussian taps of odd length ``size`` with sigma = size / 6."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and positive")
    sigma = size / 6.0
    x = np.arange(size) - size // 2
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def gaussian_blur(img: np.ndarray, size: int) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    w = gaussian_kernel1d(size)
    out = ndimage.correlate1d(np.asarray(img, dtype=np.float64), w, axis=0, mode="nearest")
    return ndimage.correlate1d(out, w, axis=1, mode="nearest")


def place_polyline(points, canvas, placement: PlacementParams, rng: np.random.Generator):
    """Rotate about the centroid, scale and translate into the canvas.

    Consumes four uniforms in order: rotation, scale, x offset, y offset.
    """
    w, h = canvas
    pts = validate_polyline(points)
    u = rng.random(4)

    lo, hi = placement.rotation_range
    angle = lo + (hi - lo) * u[0]
    c, s = math.cos(angle), math.sin(angle)
    centered = pts - pts.mean(axis=0)
    rot = centered @ np.array([[c, s], [-s, c]])

    span = rot.max(axis=0) - rot.min(axis=0)
    span = np.maximum(span, 1e-12)
    x_lo, x_hi = placement.margin_frac * (w - 1), (1.0 - placement.margin_frac) * (w - 1)
    y_lo, y_hi = placement.margin_frac * (h - 1), (1.0 - placement.margin_frac) * (h - 1)
    s_lo, s_hi = placement.scale_range
    target = (s_lo + (s_hi - s_lo) * u[1]) * min(w, h)
    scale = min(target / span.max(), (x_hi - x_lo) / span[0], (y_hi - y_lo) / span[1])

    placed = (rot - rot.min(axis=0)) * scale
    ext = placed.max(axis=0)
    placed[:, 0] += x_lo + (x_hi - x_lo - ext[0]) * u[2]
    placed[:, 1] += y_lo + (y_hi - y_lo - ext[1]) * u[3]
    return placed


def resample_polyline(points: np.ndarray, step: float = SAMPLE_STEP) -> np.ndarray:
    seg = np.diff(points, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    n = max(int(math.ceil(cum[-1] / step)), 1)
    s = np.linspace(0.0, cum[-1], n + 1)
    return np.stack([np.interp(s, cum, points[:, 0]), np.interp(s, cum, points[:, 1])], axis=1)


def draw_polyline(points: np.ndarray, canvas) -> np.ndarray:
    """One-pixel anti-aliased stroke: each pixel gets max(0, 1 - distance to the path)."""
    w, h = canvas
    img = np.zeros(h * w)
    samples = resample_polyline(np.asarray(points, dtype=np.float64))
    base = np.rint(samples).astype(np.int64)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            px = base[:, 0] + dx
            py = base[:, 1] + dy
            ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            d = np.hypot(px[ok] - samples[ok, 0], py[ok] - samples[ok, 1])
            np.maximum.at(img, py[ok] * w + px[ok], np.clip(1.0 - d, 0.0, 1.0))
    return img.reshape(h, w)


def render_crack_layer(points, canvas, placement: PlacementParams, rng: np.random.Generator,
                       return_stroke: bool = False):
    """Crack intensity layer in [0, 1] with maximum exactly 1.

    The blurred stroke is divided by the blur's response to an ideal
    pixel-aligned straight stroke (the kernel's center tap) and clipped, so
    that a single stroke reaches 1 regardless of how dense the rest of the
    crack is; the result is then rescaled to a maximum of 1.
    """
    w, h = canvas
    if w < MIN_CANVAS or h < MIN_CANVAS:
        raise ValueError(f"canvas below minimum ({MIN_CANVAS}x{MIN_CANVAS}): {w}x{h}")
    placed = place_polyline(points, canvas, placement, rng)
    choices = tuple(placement.blur_kernel_choices)
    ksize = int(choices[int(rng.integers(len(choices)))])

    stroke = draw_polyline(placed, canvas)
    blurred = gaussian_blur(stroke, ksize)
    peak = gaussian_kernel1d(ksize)[ksize // 2]
    layer = np.minimum(blurred / peak, 1.0)
    top = layer.max()
    if top > 0:
        layer = layer / top
    if return_stroke:
        return layer, stroke, ksize
    return layer


def to_mask(layer: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return np.asarray(layer) >= threshold
