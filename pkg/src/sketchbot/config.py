"""Flat run configuration shared by every CLI subcommand."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .dataset import RasterParams
from .emit import MachineFrame
from .graph import InterpParams


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """Every tunable in one place.

    Field names double as CLI flag names (``n_iters`` -> ``--n-iters``).
    Resolution order is flags, then ``--config`` file, then these defaults.
    """

    # raster
    s: int = 256
    stroke_width: float = 2.0
    corner_radius: float = 3.0
    merge_radius: Optional[float] = None
    stroke_width_range: Optional[tuple[float, float]] = None
    # interpretation
    beta: float = 1.8
    tau0: float = 0.35
    update_rate: float = 0.05
    n_iters: int = 10
    binarize_threshold: float = 0.5
    min_blob_area: int = 4
    dilate_px: int = 2
    connectivity: int = 8
    block_radius: Optional[float] = 2.0
    bbox_pad: Optional[float] = None
    max_edge_length: Optional[float] = None
    # machine frame
    box_size_mm: float = 64.0
    origin_mm: tuple[float, float] = (25.0, 25.0)
    safe_z_mm: float = -5.0
    unit_scale: float = 1.0
    # dataset / study
    seed: int = 0
    train_fraction: float = 0.8
    count: Optional[int] = None
    format: str = "ndjson_simplified"
    betas: tuple[float, ...] = (3.0, 5.0, 7.0)
    smoothing: int = 3
    split: Optional[str] = None
    sweep: bool = True
    match_tol: float = 2.0
    n_jobs: int = 1
    # paths
    source: Optional[str] = None
    input: Optional[str] = None
    labels: Optional[str] = None
    probmap: Optional[str] = None
    pred: Optional[str] = None
    truth: Optional[str] = None
    manifest: Optional[str] = None
    out: str = "out"

    def __post_init__(self):
        for name in ("origin_mm", "stroke_width_range", "betas"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, tuple(float(x) for x in v))

    def interp_params(self) -> InterpParams:
        return InterpParams(
            beta=self.beta, tau0=self.tau0, update_rate=self.update_rate, n_iters=self.n_iters,
            binarize_threshold=self.binarize_threshold, min_blob_area=self.min_blob_area,
            dilate_px=self.dilate_px, connectivity=self.connectivity,
            stroke_width=self.stroke_width, corner_radius=self.corner_radius,
            block_radius=self.block_radius, bbox_pad=self.bbox_pad,
            max_edge_length=self.max_edge_length,
        )

    def raster_params(self) -> RasterParams:
        return RasterParams(self.s, self.stroke_width, self.corner_radius, self.merge_radius,
                            self.stroke_width_range)

    def frame(self) -> MachineFrame:
        return MachineFrame(self.box_size_mm, self.origin_mm, self.safe_z_mm, self.unit_scale)

    def validate(self) -> "PipelineConfig":
        """Raise :class:`ConfigError` on the first invalid value."""
        if self.s < 32:
            raise ConfigError("s must be >= 32")
        if self.stroke_width <= 0 or self.corner_radius <= 0:
            raise ConfigError("stroke_width and corner_radius must be positive")
        if self.stroke_width_range is not None:
            lo, hi = self.stroke_width_range
            if not 0 < lo <= hi:
                raise ConfigError("stroke_width_range must satisfy 0 < lo <= hi")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.count is not None and self.count < 0:
            raise ConfigError("count must be >= 0")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        if not self.betas or any(b <= 0 for b in self.betas):
            raise ConfigError("betas must be a non-empty list of positive widths")
        if self.smoothing < 1:
            raise ConfigError("smoothing must be >= 1")
        if self.split not in (None, "train", "test"):
            raise ConfigError("split must be 'train' or 'test'")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        try:
            self.interp_params()
            self.frame()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def dump(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def merged(self, overrides: dict[str, Any]) -> "PipelineConfig":
        """Copy with every non-None entry of ``overrides`` applied."""
        d = asdict(self)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return type(self).from_dict(d)


def resolve_config(config_path: Optional[str], overrides: dict[str, Any]) -> PipelineConfig:
    base = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    return base.merged(overrides).validate()
