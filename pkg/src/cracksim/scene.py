"""PBR-style concrete material, crack compositing and a single-bounce shader."""

import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import rng as rngmod
from .fractal import FractalParams, generate_crack_polyline
from .raster import PlacementParams, render_crack_layer, to_mask

# Piecewise fit of the Planckian locus to 8-bit sRGB (Tanner Helland, 2012),
# evaluated on t = kelvin / 100.  Each channel switches branch at t = 66.
KELVIN_FIT = {
    "red": {"low": 255.0, "high": (329.698727446, -0.1332047592, 60.0)},
    "green": {"low": (99.4708025861, -161.1195681661), "high": (288.1221695283, -0.0755148492, 60.0)},
    "blue": {"high": 255.0, "low": (138.5177312231, -305.0447927307, 10.0), "zero_below": 19.0},
}
KELVIN_MIN, KELVIN_MAX = 1000.0, 40000.0

REC709 = np.array([0.2126, 0.7152, 0.0722])
VIEW_DIR = np.array([0.0, 0.0, 1.0])
SPECULAR_EPS = 1e-4
F0_DIELECTRIC = 0.04
GAMMA = 2.2


@dataclass(frozen=True)
class SunLight:
    intensity: float = 3.3
    temperature: float = 5800.0
    alpha: float = math.pi / 3
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ValueError("sun intensity must be non-negative")
        if not KELVIN_MIN <= self.temperature <= KELVIN_MAX:
            raise ValueError(f"color temperature must lie in [{KELVIN_MIN}, {KELVIN_MAX}] K")


@dataclass
class TextureSet:
    albedo: np.ndarray
    metallic: np.ndarray
    roughness: np.ndarray
    normal: np.ndarray
    height: np.ndarray
    ambient_occlusion: np.ndarray

    def __post_init__(self):
        shape = self.height.shape
        for name in ("metallic", "roughness", "ambient_occlusion"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} map shape {getattr(self, name).shape} != height shape {shape}")
        for name in ("albedo", "normal"):
            if getattr(self, name).shape != shape + (3,):
                raise ValueError(f"{name} map must have shape {shape + (3,)}")

    @property
    def shape(self):
        return self.height.shape

    def copy(self):
        return TextureSet(**{k: v.copy() for k, v in vars(self).items()})


@dataclass
class RenderedSample:
    image: np.ndarray
    gt_mask: np.ndarray
    normal_map: np.ndarray
    depth_map: np.ndarray
    meta: dict


@dataclass
class SceneConfig:
    width: int = 512
    height: int = 512
    fractal: FractalParams = field(default_factory=FractalParams)
    placement: PlacementParams = field(default_factory=PlacementParams)
    sun: SunLight = field(default_factory=SunLight)
    beta_range: tuple = (-math.pi / 6, math.pi / 6)
    ambient: float = 0.15
    darken: float = 0.8
    carve: float = 0.5
    bump_strength: float = 6.0
    texture_dir: str | None = None

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("canvas below minimum (32x32)")
        for name in ("darken", "carve"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.ambient < 0:
            raise ValueError("ambient must be non-negative")
        if self.beta_range[1] < self.beta_range[0]:
            raise ValueError("beta_range must be (low, high)")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("beta_range",):
            d[key] = list(d[key])
        for key in ("rotation_range", "blur_kernel_choices", "scale_range"):
            d["placement"][key] = list(d["placement"][key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "fractal" in d:
            d["fractal"] = FractalParams(**d["fractal"])
        if "placement" in d:
            p = dict(d["placement"])
            for key in ("rotation_range", "blur_kernel_choices", "scale_range"):
                if key in p:
                    p[key] = tuple(p[key])
            d["placement"] = PlacementParams(**p)
        if "sun" in d:
            d["sun"] = SunLight(**d["sun"])
        if "beta_range" in d:
            d["beta_range"] = tuple(d["beta_range"])
        return cls(**d)


def sample_beta(rng: np.random.Generator, low=-math.pi / 6, high=math.pi / 6) -> float:
    return float(low + (high - low) * rng.random())


def sun_direction(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Direction of travel of sunlight: R_z(gamma) R_y(beta) R_x(alpha) (0, 0, -1)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    v = rz @ ry @ rx @ np.array([0.0, 0.0, -1.0])
    return v / np.linalg.norm(v)


def kelvin_to_rgb(kelvin: float) -> np.ndarray:
    if not KELVIN_MIN <= kelvin <= KELVIN_MAX:
        raise ValueError(f"color temperature {kelvin} K outside [{KELVIN_MIN}, {KELVIN_MAX}]")
    t = kelvin / 100.0
    fit = KELVIN_FIT
    if t <= 66:
        r = fit["red"]["low"]
        a, b = fit["green"]["low"]
        g = a * math.log(t) + b
    else:
        a, e, off = fit["red"]["high"]
        r = a * (t - off) ** e
        a, e, off = fit["green"]["high"]
        g = a * (t - off) ** e
    if t >= 66:
        bl = fit["blue"]["high"]
    elif t <= fit["blue"]["zero_below"]:
        bl = 0.0
    else:
        a, b, off = fit["blue"]["low"]
        bl = a * math.log(t - off) + b
    return np.clip(np.array([r, g, bl]) / 255.0, 0.0, 1.0)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec. 709 luma of an (..., 3) array."""
    return np.clip(np.asarray(rgb, dtype=np.float64) @ REC709, 0.0, 1.0)


def _value_noise(rng, h, w, cells):
    """Smoothstep-interpolated lattice noise with ``cells`` cells along the shorter side."""
    step = min(h, w) / cells
    gh, gw = int(math.ceil(h / step)) + 2, int(math.ceil(w / step)) + 2
    lattice = rng.random((gh, gw))
    y = np.arange(h) / step
    x = np.arange(w) / step
    y0, x0 = y.astype(int), x.astype(int)
    fy, fx = y - y0, x - x0
    fy = fy * fy * (3 - 2 * fy)
    fx = fx * fx * (3 - 2 * fx)
    v00 = lattice[np.ix_(y0, x0)]
    v01 = lattice[np.ix_(y0, x0 + 1)]
    v10 = lattice[np.ix_(y0 + 1, x0)]
    v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
    top = v00 + (v01 - v00) * fx[None, :]
    bot = v10 + (v11 - v10) * fx[None, :]
    return top + (bot - top) * fy[:, None]


def _fbm(rng, h, w, cells, persistence=0.5):
    out = np.zeros((h, w))
    amp, total = 1.0, 0.0
    for c in cells:
        out += amp * _value_noise(rng, h, w, c)
        total += amp
        amp *= persistence
    return out / total


def _stretch(x):
    lo, hi = x.min(), x.max()
    return (x - lo) / (hi - lo) if hi > lo else np.zeros_like(x)


def normal_from_height(height: np.ndarray, strength: float) -> np.ndarray:
    gy, gx = np.gradient(height)
    n = np.stack([-strength * gx, -strength * gy, np.ones_like(height)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def procedural_concrete(seed: int, size, bump_strength: float = 6.0) -> TextureSet:
    """Value-noise concrete; ``size`` is an int or a (width, height) pair."""
    w, h = (size, size) if np.isscalar(size) else size
    if min(w, h) < 64:
        raise ValueError("procedural texture size must be at least 64")
    rng = rngmod.make_rng(seed)
    fine = [c for c in (4, 8, 16, 32, 64, 128, 256, 512) if c <= min(w, h) // 2]

    height = _stretch(_fbm(rng, h, w, fine, persistence=0.6))
    pores = rng.random((h, w)) < 0.004
    if pores.any():
        height = np.where(ndimage.binary_dilation(pores), height * 0.6, height)

    tone = _fbm(rng, h, w, [2, 4, 8])
    grain = rng.random((h, w))
    base = 0.50 + 0.16 * (tone - 0.5) + 0.08 * (grain - 0.5) + 0.08 * (height - 0.5)
    tint = np.array([1.0, 0.985, 0.95])
    albedo = np.clip(base[..., None] * tint, 0.0, 1.0)

    roughness = 0.5 + 0.4 * _stretch(_fbm(rng, h, w, [16, 32, 64][: max(1, len(fine) - 1)]))

    cavity = np.clip(ndimage.uniform_filter(height, size=9, mode="nearest") - height, 0.0, None)
    ao = np.clip(1.0 - 2.5 * cavity, 0.3, 1.0)

    return TextureSet(
        albedo=albedo,
        metallic=np.zeros((h, w)),
        roughness=roughness,
        normal=normal_from_height(height, bump_strength),
        height=height,
        ambient_occlusion=ao,
    )


def load_texture_set(directory, size, bump_strength: float = 6.0) -> TextureSet:
    """Read albedo/roughness/normal/height/ao PNGs from ``directory``.

    Maps are resized to ``size`` = (width, height) when needed.  A missing
    normal.png is derived from height.png; a missing ao.png means no occlusion.
    """
    from .io import read_image

    d = Path(directory)
    w, h = size

    def load(name, gray):
        path = d / name
        if not path.exists():
            return None
        return read_image(path, gray=gray, size=(w, h))

    albedo = load("albedo.png", gray=False)
    height = load("height.png", gray=True)
    roughness = load("roughness.png", gray=True)
    if albedo is None or height is None or roughness is None:
        raise FileNotFoundError(f"texture set {d} needs albedo.png, roughness.png and height.png")
    normal = load("normal.png", gray=False)
    if normal is None:
        normal = normal_from_height(height, bump_strength)
    else:
        normal = 2.0 * normal - 1.0
        normal[..., 2] = np.maximum(normal[..., 2], 1e-3)
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
    ao = load("ao.png", gray=True)
    if ao is None:
        ao = np.ones((h, w))
    return TextureSet(albedo=albedo, metallic=np.zeros((h, w)), roughness=roughness,
                      normal=normal, height=height, ambient_occlusion=ao)


def compose_material(textures: TextureSet, crack: np.ndarray, darken: float, carve: float,
                     bump_strength: float = 6.0) -> TextureSet:
    """Darken the albedo and carve the height along the crack.

    Normals are re-derived from the carved height by adding the slope of the
    carve to each normal's slope, so user-supplied normal detail survives.
    """
    crack = np.asarray(crack, dtype=np.float64)
    if crack.shape != textures.shape:
        raise ValueError(f"crack layer shape {crack.shape} != texture shape {textures.shape}")
    if not (0.0 <= darken <= 1.0 and 0.0 <= carve <= 1.0):
        raise ValueError("darken and carve must lie in [0, 1]")
    out = textures.copy()
    out.albedo = textures.albedo * (1.0 - darken * crack)[..., None]
    out.height = np.maximum(textures.height - carve * crack, 0.0)

    delta = out.height - textures.height
    if np.any(delta):
        gy, gx = np.gradient(delta)
        n = textures.normal
        slope = n / np.maximum(n[..., 2:3], 1e-3)
        slope[..., 0] -= bump_strength * gx
        slope[..., 1] -= bump_strength * gy
        renorm = slope / np.linalg.norm(slope, axis=-1, keepdims=True)
        touched = ((gx != 0) | (gy != 0))[..., None]
        out.normal = np.where(touched, renorm, n)
    return out


def shade(material: TextureSet, light: SunLight, ambient: float = 0.15):
    """Direct sun plus ambient term, Blinn-Phong highlight, x/(1+x) tone map, gamma 2.2.

    The sun's color multiplies only the sun-driven terms; the ambient term
    is achromatic.  Returns (image, encoded normal map, depth map).
    """
    n = material.normal
    to_light = -sun_direction(light.alpha, light.beta, light.gamma)
    color = kelvin_to_rgb(light.temperature)

    ndotl = np.maximum(n @ to_light, 0.0)
    half = to_light + VIEW_DIR
    half = half / np.linalg.norm(half)
    ndoth = np.maximum(n @ half, 0.0)
    rough = material.roughness
    exponent = 2.0 / (rough**4 + SPECULAR_EPS) - 2.0
    spec = (1.0 - rough) * F0_DIELECTRIC * ndoth**exponent * ndotl

    sunlit = light.intensity * ndotl
    diffuse = material.albedo * material.ambient_occlusion[..., None] * (
        ambient + sunlit[..., None] * color)
    radiance = diffuse + (light.intensity * spec)[..., None] * color
    image = (radiance / (1.0 + radiance)) ** (1.0 / GAMMA)

    normal_map = (n + 1.0) / 2.0
    depth_map = _stretch(material.height)
    return image, normal_map, depth_map


def render_sample(config: SceneConfig, seed: int) -> RenderedSample:
    """Full pipeline for one sample; every stage seeds from ``seed`` by stream id."""
    size = (config.width, config.height)
    s_fractal = rngmod.child_seed(seed, rngmod.STREAM_FRACTAL)
    s_place = rngmod.child_seed(seed, rngmod.STREAM_PLACEMENT)
    s_tex = rngmod.child_seed(seed, rngmod.STREAM_TEXTURE)
    s_light = rngmod.child_seed(seed, rngmod.STREAM_LIGHT)

    points = generate_crack_polyline(config.fractal, s_fractal)
    layer = render_crack_layer(points, size, config.placement, rngmod.make_rng(s_place))
    gt = to_mask(layer, config.placement.mask_threshold)

    if config.texture_dir:
        textures = load_texture_set(config.texture_dir, size, config.bump_strength)
        texture_id = Path(config.texture_dir).name
    else:
        textures = procedural_concrete(s_tex, size, config.bump_strength)
        texture_id = f"procedural:{s_tex}"

    beta = sample_beta(rngmod.make_rng(s_light), *config.beta_range)
    light = SunLight(config.sun.intensity, config.sun.temperature, config.sun.alpha, beta, config.sun.gamma)
    material = compose_material(textures, layer, config.darken, config.carve, config.bump_strength)
    image, normal_map, depth_map = shade(material, light, config.ambient)

    meta = {
        "seed": int(seed),
        "fractal": asdict(config.fractal),
        "placement": config.to_dict()["placement"],
        "sun": asdict(light),
        "texture_id": texture_id,
    }
    return RenderedSample(image=image, gt_mask=gt, normal_map=normal_map, depth_map=depth_map, meta=meta)
