"""YAML run configuration.

Top-level sections, all optional::

    scene:      SceneConfig fields (width, height, fractal, placement, sun, ...)
    pmi:        PmiParams fields
    segmenter:  SegmenterParams fields
    metrics:    MetricsParams fields

Unknown keys are rejected so typos do not silently fall back to defaults.
"""

from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import yaml

from .metrics import MetricsParams
from .pmi import PmiParams
from .scene import SceneConfig
from .segment import SegmenterParams

SECTIONS = ("scene", "pmi", "segmenter", "metrics")


@dataclass
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    pmi: PmiParams = field(default_factory=PmiParams)
    segmenter: SegmenterParams = field(default_factory=SegmenterParams)
    metrics: MetricsParams = field(default_factory=MetricsParams)

    def to_dict(self) -> dict:
        pmi = asdict(self.pmi)
        pmi["pair_distance_range"] = list(pmi["pair_distance_range"])
        return {
            "scene": self.scene.to_dict(),
            "pmi": pmi,
            "segmenter": asdict(self.segmenter),
            "metrics": asdict(self.metrics),
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "RunConfig":
        d = d or {}
        if not isinstance(d, dict):
            raise ValueError("config root must be a mapping")
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        try:
            pmi = dict(d.get("pmi") or {})
            if "pair_distance_range" in pmi:
                pmi["pair_distance_range"] = tuple(pmi["pair_distance_range"])
            return cls(
                scene=SceneConfig.from_dict(d.get("scene") or {}),
                pmi=PmiParams(**pmi),
                segmenter=SegmenterParams(**(d.get("segmenter") or {})),
                metrics=MetricsParams(**(d.get("metrics") or {})),
            )
        except TypeError as exc:
            raise ValueError(f"invalid config: {exc}") from exc

    def with_overrides(self, theta=None, quantile=None) -> "RunConfig":
        out = self
        if theta is not None:
            out = replace(out, metrics=replace(out.metrics, theta=theta))
        if quantile is not None:
            out = replace(out, segmenter=replace(out.segmenter, quantile=quantile))
        return out


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValueError(f"{path}: not valid YAML: {exc}") from exc
    return RunConfig.from_dict(data)
