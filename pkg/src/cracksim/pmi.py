"""Pixel affinity from pointwise mutual information of gray-level pairs.

Marginal and joint gray-level densities are fitted with Gaussian KDE
(Scott's rule), tabulated on a regular grid over [0, 1] and queried by
bilinear interpolation.  For a pixel pair with values (a, b)

    PMI(a, b) = tau * log P(a, b) - log P(a) - log P(b)

and a pixel's affinity is the sum of exp(PMI) over its disk neighborhood.
Low affinity marks pixels whose value pairs are rare in the image.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .scene import luminance

DENSITY_FLOOR = 1e-12


class DegenerateTexture(ValueError):
    """Image (or its sample) has no usable gray-level variation."""


@dataclass(frozen=True)
class PmiParams:
    n_pairs: int = 10000
    pair_distance_range: tuple = (1, 8)
    neighborhood_radius: int = 5
    tau: float = 2.25
    grid_bins: int = 64
    min_variance: float = 1e-8

    def __post_init__(self):
        if self.n_pairs < 2:
            raise ValueError("n_pairs must be at least 2")
        lo, hi = self.pair_distance_range
        if not (int(lo) == lo and int(hi) == hi and 1 <= lo <= hi):
            raise ValueError("pair_distance_range must be integers 1 <= d_min <= d_max")
        if self.neighborhood_radius < 1:
            raise ValueError("neighborhood_radius must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.grid_bins < 2:
            raise ValueError("grid_bins must be at least 2")
        if not self.min_variance > 0:
            raise ValueError("min_variance must be positive")


@dataclass
class Density1D:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float

    def __call__(self, v):
        return interp_1d(self, v)


@dataclass
class Density2D:
    grid: np.ndarray
    values: np.ndarray  # values[i, j] = P(grid[i], grid[j])
    bandwidths: tuple

    def __call__(self, a, b):
        return interp_2d(self, a, b)


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        return np.clip(rgb, 0.0, 1.0)
    return luminance(rgb)


def scott_bandwidth(x: np.ndarray, dims: int = 1) -> float:
    """sigma_hat * n ** (-1 / (dims + 4)) with the sample (ddof=1) deviation."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.std(x, ddof=1) * len(x) ** (-1.0 / (dims + 4)))


def _kernel_matrix(samples, grid, h):
    z = (grid[None, :] - samples[:, None]) / h
    return np.exp(-0.5 * z * z) / (h * np.sqrt(2.0 * np.pi))


def trapezoid_1d(values, grid):
    return float(trapezoid(values, grid))


def trapezoid_2d(values, grid):
    return float(trapezoid(trapezoid(values, grid, axis=1), grid))


def kde_1d(samples, grid) -> Density1D:
    h = scott_bandwidth(samples, 1)
    values = _kernel_matrix(samples, grid, h).mean(axis=0)
    # renormalize the mass that falls outside [0, 1]
    values = values / trapezoid_1d(values, grid)
    return Density1D(grid=grid, values=values, bandwidth=h)


def kde_2d(a, b, grid, symmetrize=True) -> Density2D:
    """Product-kernel KDE with per-axis Scott bandwidths."""
    ha, hb = scott_bandwidth(a, 2), scott_bandwidth(b, 2)
    ka = _kernel_matrix(a, grid, ha)
    kb = _kernel_matrix(b, grid, hb)
    values = ka.T @ kb / len(a)
    if symmetrize:
        values = 0.5 * (values + values.T)
    values = values / trapezoid_2d(values, grid)
    return Density2D(grid=grid, values=values, bandwidths=(ha, hb))


def sample_pairs(shape, params: PmiParams, rng: np.random.Generator):
    """Flat indices of ``n_pairs`` ordered pixel pairs.

    Draw order: first pixel rows/cols, then integer distances, then angles.
    The offset is the rounded polar vector, clamped into the image.
    """
    h, w = shape
    n = params.n_pairs
    rows = rng.integers(0, h, n)
    cols = rng.integers(0, w, n)
    d_lo, d_hi = params.pair_distance_range
    dist = rng.integers(d_lo, d_hi + 1, n)
    phi = 2.0 * np.pi * rng.random(n)
    rows2 = np.clip(rows + np.rint(dist * np.sin(phi)).astype(np.int64), 0, h - 1)
    cols2 = np.clip(cols + np.rint(dist * np.cos(phi)).astype(np.int64), 0, w - 1)
    return rows * w + cols, rows2 * w + cols2


def estimate_densities(gray: np.ndarray, params: PmiParams, rng: np.random.Generator):
    """Fit the marginal and the symmetrized joint gray-level densities.

    Raises DegenerateTexture when the image or a drawn sample has variance
    below ``params.min_variance``.
    """
    gray = np.asarray(gray, dtype=np.float64)
    flat = np.clip(gray.ravel(), 0.0, 1.0)
    if flat.var() < params.min_variance:
        raise DegenerateTexture("degenerate texture: image variance below min_variance")
    grid = np.linspace(0.0, 1.0, params.grid_bins)

    single = flat[rng.integers(0, flat.size, params.n_pairs)]
    first, second = sample_pairs(gray.shape, params, rng)
    a, b = flat[first], flat[second]
    for s in (single, a, b):
        if np.var(s, ddof=1) < params.min_variance:
            raise DegenerateTexture("degenerate texture: sampled variance below min_variance")
    return kde_1d(single, grid), kde_2d(a, b, grid)


def _grid_coords(v, n_bins):
    f = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0) * (n_bins - 1)
    i0 = np.minimum(np.floor(f).astype(np.int64), n_bins - 2)
    return i0, f - i0


def interp_1d(density: Density1D, v):
    i0, t = _grid_coords(v, len(density.grid))
    vals = density.values
    return (1.0 - t) * vals[i0] + t * vals[i0 + 1]


def _interp_2d_coords(values, ia, ta, ib, tb):
    g = values.shape[1]
    flat = values.ravel()
    base = ia * g + ib
    return ((1.0 - ta) * ((1.0 - tb) * flat[base] + tb * flat[base + 1])
            + ta * ((1.0 - tb) * flat[base + g] + tb * flat[base + g + 1]))


def interp_2d(density: Density2D, a, b):
    n = len(density.grid)
    ia, ta = _grid_coords(a, n)
    ib, tb = _grid_coords(b, n)
    return _interp_2d_coords(density.values, ia, ta, ib, tb)


def pmi_from_probabilities(p_joint, p_a, p_b, tau):
    p_joint = np.maximum(p_joint, DENSITY_FLOOR)
    p_a = np.maximum(p_a, DENSITY_FLOOR)
    p_b = np.maximum(p_b, DENSITY_FLOOR)
    return tau * np.log(p_joint) - np.log(p_a) - np.log(p_b)


def pmi_score(joint: Density2D, marginal: Density1D, a, b, tau: float):
    return pmi_from_probabilities(interp_2d(joint, a, b), interp_1d(marginal, a), interp_1d(marginal, b), tau)


def disk_offsets(radius: int):
    """Integer (dy, dx) with 0 < dy**2 + dx**2 <= radius**2, in raster order."""
    r = int(radius)
    return [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
            if 0 < dy * dy + dx * dx <= r * r]


def affinity_from_densities(gray, joint: Density2D, marginal: Density1D, params: PmiParams):
    gray = np.clip(np.asarray(gray, dtype=np.float64), 0.0, 1.0)
    h, w = gray.shape
    n_bins = len(joint.grid)
    idx, frac = _grid_coords(gray, n_bins)
    log_marg = np.log(np.maximum(interp_1d(marginal, gray), DENSITY_FLOOR))
    out = np.zeros((h, w))
    for dy, dx in disk_offsets(params.neighborhood_radius):
        # pixel i spans rows ys/cols xs; its neighbor j = i + (dy, dx) spans yd/xd
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        yd = slice(max(0, dy), h - max(0, -dy))
        xd = slice(max(0, dx), w - max(0, -dx))
        p_joint = _interp_2d_coords(joint.values, idx[ys, xs], frac[ys, xs], idx[yd, xd], frac[yd, xd])
        pmi = (params.tau * np.log(np.maximum(p_joint, DENSITY_FLOOR))
               - log_marg[ys, xs] - log_marg[yd, xd])
        out[ys, xs] += np.exp(pmi)
    return out


def affinity_map(gray: np.ndarray, params: PmiParams = PmiParams(), rng=None) -> np.ndarray:
    """Per-pixel affinity; degenerate textures give a constant map equal to the full disk size."""
    if rng is None:
        rng = np.random.default_rng(0)
    gray = np.asarray(gray, dtype=np.float64)
    try:
        marginal, joint = estimate_densities(gray, params, rng)
    except DegenerateTexture:
        return np.full(gray.shape, float(len(disk_offsets(params.neighborhood_radius))))
    return affinity_from_densities(gray, joint, marginal, params)
