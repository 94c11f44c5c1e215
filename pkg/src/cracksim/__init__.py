"""Synthetic cracked-concrete images, PMI affinity maps and thin-structure segmentation metrics."""

from .fractal import FractalParams, generate_crack_polyline
from .metrics import MetricsParams, MetricsReport, evaluate
from .pmi import PmiParams, affinity_map
from .raster import PlacementParams, render_crack_layer, to_mask
from .scene import RenderedSample, SceneConfig, SunLight, render_sample
from .segment import SegmenterParams, segment_by_affinity

__all__ = [
    "FractalParams", "generate_crack_polyline",
    "PlacementParams", "render_crack_layer", "to_mask",
    "SceneConfig", "SunLight", "RenderedSample", "render_sample",
    "PmiParams", "affinity_map",
    "SegmenterParams", "segment_by_affinity",
    "MetricsParams", "MetricsReport", "evaluate",
]
__version__ = "0.1.0"
