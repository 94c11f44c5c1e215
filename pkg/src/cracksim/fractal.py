"""Stochastic Koch-variant crack centerlines.

Each segment AB is cut in thirds (A, C, D, B) and the middle third is
replaced by a tent C-E-D whose apex E is pushed off the midpoint of CD.
The push has magnitude ``r * |CD|`` with ``r`` drawn from the density
``2r/p**2`` on ``[0, p]``, and points along the left normal of CD rotated
by a Gaussian angle ``theta``.  With ``theta = 0`` and ``r = sqrt(3)/2`` the
classic Koch apex is recovered.

Draw order per subdivision: for every segment, in list order, one uniform
for theta followed by one uniform for r.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .rng import make_rng, open_uniform


@dataclass(frozen=True)
class FractalParams:
    depth: int = 7
    p: float = 1.0
    angle_mu_deg: float = 0.0
    angle_sigma_deg: float = 30.0

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 0:
            raise ValueError(f"depth must be a non-negative integer, got {self.depth}")
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.angle_sigma_deg > 0:
            raise ValueError(f"angle_sigma_deg must be positive, got {self.angle_sigma_deg}")


def magnitude_from_uniform(u, p):
    """Inverse CDF of the density 2r/p**2 on [0, p]: r = p * sqrt(u)."""
    return p * np.sqrt(u)


def angle_from_uniform(u, params: FractalParams):
    """Inverse CDF of Normal(mu, sigma) in degrees, returned in radians."""
    return np.radians(params.angle_mu_deg + params.angle_sigma_deg * ndtri(u))


def sample_displacements(rng: np.random.Generator, params: FractalParams, n: int):
    """Draw ``n`` (r, theta) pairs; theta in radians."""
    u = open_uniform(rng, (n, 2))
    return magnitude_from_uniform(u[:, 1], params.p), angle_from_uniform(u[:, 0], params)


def sample_displacement(rng: np.random.Generator, params: FractalParams):
    r, theta = sample_displacements(rng, params, 1)
    return float(r[0]), float(theta[0])


def koch_step(points: np.ndarray, r, theta) -> np.ndarray:
    """Replace every segment with A-C-E-D using the given displacements.

    ``r`` and ``theta`` are scalars or arrays with one entry per segment.
    """
    points = np.asarray(points, dtype=np.float64)
    a, b = points[:-1], points[1:]
    n_seg = len(a)
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (n_seg,))
    theta = np.broadcast_to(np.asarray(theta, dtype=np.float64), (n_seg,))

    seg = b - a
    c = a + seg / 3.0
    d = a + 2.0 * seg / 3.0
    cd = d - c
    # left normal of CD scaled to |CD|, then rotated by theta
    nx, ny = -cd[:, 1], cd[:, 0]
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    off = np.stack([cos_t * nx - sin_t * ny, sin_t * nx + cos_t * ny], axis=1)
    e = 0.5 * (c + d) + r[:, None] * off

    out = np.empty((4 * n_seg + 1, 2))
    out[0:-1:4] = a
    out[1::4] = c
    out[2::4] = e
    out[3::4] = d
    out[-1] = points[-1]
    return out


def subdivide_once(points: np.ndarray, rng: np.random.Generator, params: FractalParams) -> np.ndarray:
    r, theta = sample_displacements(rng, params, len(points) - 1)
    return koch_step(points, r, theta)


def generate_crack_polyline(params: FractalParams, seed: int) -> np.ndarray:
    """Crack centerline as an (4**depth + 1, 2) array, starting from (0,0)-(1,0)."""
    rng = make_rng(seed)
    points = np.array([[0.0, 0.0], [1.0, 0.0]])
    for _ in range(params.depth):
        points = subdivide_once(points, rng, params)
    return points


def validate_polyline(points) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or len(points) < 2:
        raise ValueError("polyline must be an (n >= 2, 2) array")
    if not np.all(np.isfinite(points)):
        raise ValueError("polyline has non-finite coordinates")
    if np.any(np.all(points[1:] == points[:-1], axis=1)):
        raise ValueError("polyline has repeated consecutive points")
    return points
