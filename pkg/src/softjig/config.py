"""Run configuration: JSON in, validated dataclasses out.

Every section is optional; missing keys take the defaults below. Unknown keys
and invalid values raise :class:`~softjig.errors.ConfigError` naming the key.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .calibration import PipelineSetup, SweepConfig
from .detect import LoGParams
from .errors import ConfigError
from .plane import CropSpec
from .sim import ContactSpec, JigGeometry, StereoRig
from .stereo import StereoMatchParams


@dataclass(frozen=True)
class RenderConfig:
    blur_sigma: float = 2.0
    noise_sigma: float = 2.0

    def __post_init__(self):
        if not self.blur_sigma > 0:
            raise ValueError("blur_sigma must be > 0")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class MatchingConfig:
    """Disparity bounds left as ``None`` are derived from the rig and jig geometry."""

    max_row_diff: float = 1.0
    min_disparity: float | None = None
    max_disparity: float | None = None

    def resolve(self, rig: StereoRig, geom: JigGeometry) -> StereoMatchParams:
        auto = StereoMatchParams.for_rig(rig, geom, self.max_row_diff)
        return StereoMatchParams(
            self.max_row_diff,
            auto.min_disparity if self.min_disparity is None else self.min_disparity,
            auto.max_disparity if self.max_disparity is None else self.max_disparity,
        )


@dataclass(frozen=True)
class GridConfig:
    diameters: tuple = (30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    alphas: tuple = (5.0, 10.0, 15.0, 20.0)
    n: int = 36
    push_depth: float = 10.0

    def __post_init__(self):
        if not self.diameters or not self.alphas:
            raise ValueError("diameters and alphas must be non-empty")
        if any(not d > 0 for d in self.diameters):
            raise ValueError("diameters must be > 0")
        if any(not 0 <= a < 45 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 45)")
        if self.n < 8:
            raise ValueError("n must be >= 8")
        object.__setattr__(self, "diameters", tuple(float(d) for d in self.diameters))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))


@dataclass(frozen=True)
class RunConfig:
    jig: JigGeometry = field(default_factory=JigGeometry)
    rig: StereoRig = field(default_factory=StereoRig)
    render: RenderConfig = field(default_factory=RenderConfig)
    detection: LoGParams = field(default_factory=LoGParams)
    matching: MatchingConfig = field(default_factory=MatchingConfig)
    crop: CropSpec = field(default_factory=CropSpec)
    contact: ContactSpec = field(default_factory=ContactSpec)
    calibration: SweepConfig = field(default_factory=SweepConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    registration: str = "nominal"
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        if self.registration not in ("nominal", "pnp"):
            raise ValueError("registration must be 'nominal' or 'pnp'")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if not self.contact.push_depth < self.jig.membrane_rest_height:
            raise ValueError("contact.push_depth must be below jig.membrane_rest_height")

    def match_params(self) -> StereoMatchParams:
        return self.matching.resolve(self.rig, self.jig)

    def setup(self) -> PipelineSetup:
        return PipelineSetup(
            geometry=self.jig,
            rig=self.rig,
            blur_sigma=self.render.blur_sigma,
            noise_sigma=self.render.noise_sigma,
            detection=self.detection,
            matching=self.match_params(),
            margin_factor=self.crop.margin_factor,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _tupleize(v):
    if isinstance(v, list):
        return tuple(_tupleize(x) for x in v)
    return v


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key {where + '.' if where else ''}{unknown[0]}")
    kwargs = {}
    for name, value in data.items():
        key = f"{where}.{name}" if where else name
        f = fields[name]
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(sub):
            kwargs[name] = _build(sub, value, key)
        else:
            kwargs[name] = _tupleize(value)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid value in {where or 'config'}: {e}") from e


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path=None) -> RunConfig:
    """Load and validate a JSON config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return config_from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
