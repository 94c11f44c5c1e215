"""Training-free crack masks from affinity maps."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SegmenterParams:
    quantile: float = 0.02
    min_component_px: int = 20
    closing_radius: int = 1

    def __post_init__(self):
        if not 0.0 <= self.quantile <= 1.0:
            raise ValueError("quantile must lie in [0, 1]")
        if self.min_component_px < 0 or self.closing_radius < 0:
            raise ValueError("min_component_px and closing_radius must be non-negative")


def disk(radius: int) -> np.ndarray:
    r = int(radius)
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    return x * x + y * y <= r * r


def low_affinity(affinity: np.ndarray, quantile: float) -> np.ndarray:
    """Pixels at or below the empirical ``quantile`` of the map.

    The threshold is the k-th smallest value with k = round(quantile * n);
    k = 0 selects nothing.
    """
    a = np.asarray(affinity, dtype=np.float64)
    k = int(round(quantile * a.size))
    if k == 0:
        return np.zeros(a.shape, dtype=bool)
    thresh = np.partition(a.ravel(), k - 1)[k - 1]
    return a <= thresh


def binary_closing(mask: np.ndarray, radius: int) -> np.ndarray:
    """Closing with a disk; the image is padded so borders do not erode."""
    if radius <= 0:
        return mask.copy()
    se = disk(radius)
    padded = np.pad(mask, radius, mode="constant")
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, se), se, border_value=1)
    return closed[radius:-radius, radius:-radius]


def remove_small_components(mask: np.ndarray, min_px: int) -> np.ndarray:
    if min_px <= 0 or not mask.any():
        return mask.copy()
    labels, n = ndimage.label(mask, structure=EIGHT_CONNECTED)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    keep = sizes >= min_px
    keep[0] = False
    return keep[labels]


def segment_by_affinity(affinity: np.ndarray, params: SegmenterParams = SegmenterParams()) -> np.ndarray:
    mask = low_affinity(affinity, params.quantile)
    mask = binary_closing(mask, params.closing_radius)
    return remove_small_components(mask, params.min_component_px)
