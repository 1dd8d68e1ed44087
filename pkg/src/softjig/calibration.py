"""Sine-sweep calibration of raw tilt angles and the diameter x tilt RMSE grid.

A sweep holds the tilt magnitude ``alpha`` fixed while the tilt direction turns
through a full circle, so each raw angle component traces a sinusoid. Offsets
are the sinusoid means; the scale maps the pooled standard deviation back to
the commanded amplitude.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detect import LoGParams
from .errors import DegenerateConfigurationError, DomainError, InsufficientDataError
from .geometry import TiltAngles
from .plane import CropSpec, estimate_principal_normal
from .sim import ContactSpec, JigGeometry, StereoRig, generate_scene
from .stereo import StereoMatchParams

log = logging.getLogger(__name__)

CALIBRATION_STAGE = 0
EVALUATION_STAGE = 1


@dataclass(frozen=True)
class SweepConfig:
    alpha: float = 10.0
    diameter: float = 60.0
    n: int = 36
    push_depth: float = 10.0

    def __post_init__(self):
        if self.n < 8:
            raise DomainError("sweep needs n >= 8 directions")
        if not self.diameter > 0:
            raise DomainError("diameter must be > 0")

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n) * (360.0 / self.n)


@dataclass(frozen=True)
class PipelineSetup:
    """Everything needed to simulate a contact and run the estimator on it."""

    geometry: JigGeometry = field(default_factory=JigGeometry)
    rig: StereoRig = field(default_factory=StereoRig)
    blur_sigma: float = 2.0
    noise_sigma: float = 2.0
    detection: LoGParams = field(default_factory=LoGParams)
    matching: StereoMatchParams | None = None
    margin_factor: float = 0.9

    def match_params(self) -> StereoMatchParams:
        return self.matching or StereoMatchParams.for_rig(self.rig, self.geometry)


@dataclass(frozen=True, eq=False)
class CalibrationSamples:
    """Raw (measured) and commanded tilt angles for the successful samples of a sweep.

    Arrays are (n, 2) with columns ``(ax, ay)`` in degrees.
    """

    measured: np.ndarray
    commanded: np.ndarray
    thetas: np.ndarray
    config: SweepConfig
    failed: int = 0

    def __post_init__(self):
        m = np.asarray(self.measured, dtype=np.float64).reshape(-1, 2)
        c = np.asarray(self.commanded, dtype=np.float64).reshape(-1, 2)
        if len(m) != len(c):
            raise DomainError("measured and commanded must have equal length")
        object.__setattr__(self, "measured", m)
        object.__setattr__(self, "commanded", c)
        object.__setattr__(self, "thetas", np.asarray(self.thetas, dtype=np.float64))

    def __len__(self):
        return len(self.measured)


@dataclass(frozen=True)
class CalibrationParams:
    offset_x: float
    offset_y: float
    scale: float
    sigma_x: float
    sigma_y: float
    source_sweep: str = ""

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("scale must be > 0")
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise DomainError("sigmas must be >= 0")

    def to_dict(self) -> dict:
        return {
            "o_x_deg": self.offset_x,
            "o_y_deg": self.offset_y,
            "scale": self.scale,
            "sigma_x_deg": self.sigma_x,
            "sigma_y_deg": self.sigma_y,
            "source_sweep": self.source_sweep,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CalibrationParams:
        return cls(d["o_x_deg"], d["o_y_deg"], d["scale"], d["sigma_x_deg"], d["sigma_y_deg"], d.get("source_sweep", ""))


@dataclass(frozen=True, eq=False)
class RmseGrid:
    """RMSE (deg) per (diameter, alpha); NaN marks cells where every sample failed."""

    diameters: tuple
    alphas: tuple
    rmse: np.ndarray
    failed: np.ndarray
    samples: dict = field(default_factory=dict, repr=False)

    def cell(self, diameter: float, alpha: float) -> float:
        return float(self.rmse[list(self.diameters).index(diameter), list(self.alphas).index(alpha)])


def sample_seed(master_seed: int, stage: int, diameter: float, alpha: float, index: int) -> np.random.SeedSequence:
    """Per-sample seed that depends only on the sample's identity, never on scheduling."""
    return np.random.SeedSequence(
        [int(master_seed), stage, int(round(diameter * 1000)), int(round(alpha * 1000)), index]
    )


def _measure_one(args):
    config, theta, setup, seed = args
    contact = ContactSpec(config.diameter, config.alpha, theta, config.push_depth)
    scene = generate_scene(setup.geometry, setup.rig, contact, setup.blur_sigma, setup.noise_sigma, seed)
    try:
        _, tilt, _ = estimate_principal_normal(
            scene.image_left,
            scene.image_right,
            setup.rig,
            setup.detection,
            setup.match_params(),
            CropSpec.for_diameter(config.diameter, setup.margin_factor),
        )
    except (InsufficientDataError, DegenerateConfigurationError) as e:
        log.debug("sample D=%s alpha=%s theta=%s failed: %s", config.diameter, config.alpha, theta, e)
        return None, scene.ground_truth_tilt
    return tilt, scene.ground_truth_tilt


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_sweep(
    config: SweepConfig,
    setup: PipelineSetup,
    seed: int = 0,
    stage: int = CALIBRATION_STAGE,
    threads: int = 1,
) -> CalibrationSamples:
    """Simulate and measure one contact per tilt direction; failed samples are dropped."""
    thetas = config.thetas
    jobs = [
        (config, float(t), setup, sample_seed(seed, stage, config.diameter, config.alpha, i))
        for i, t in enumerate(thetas)
    ]
    results = _map(_measure_one, jobs, threads)
    keep = [i for i, (m, _) in enumerate(results) if m is not None]
    measured = [results[i][0].as_array() for i in keep]
    commanded = [results[i][1].as_array() for i in keep]
    return CalibrationSamples(
        np.array(measured).reshape(-1, 2),
        np.array(commanded).reshape(-1, 2),
        thetas[keep],
        config,
        failed=len(results) - len(keep),
    )


def compute_calibration(samples: CalibrationSamples, source: str = "") -> CalibrationParams:
    n = len(samples)
    if n == 0:
        raise InsufficientDataError("calibration needs at least one sample")
    ax, ay = samples.measured[:, 0], samples.measured[:, 1]
    o_x, o_y = float(np.mean(ax)), float(np.mean(ay))
    s_x = float(np.sqrt(np.mean((ax - o_x) ** 2)))
    s_y = float(np.sqrt(np.mean((ay - o_y) ** 2)))
    if s_x + s_y == 0:
        raise DegenerateConfigurationError("sweep has zero spread; scale is undefined")
    scale = 2 * samples.config.alpha / (np.sqrt(2) * (s_x + s_y))
    if not source:
        source = f"D={samples.config.diameter:g}mm alpha={samples.config.alpha:g}deg n={n}"
    return CalibrationParams(o_x, o_y, float(scale), s_x, s_y, source)


def apply_calibration(t, p: CalibrationParams):
    """Subtract offsets then scale. Accepts TiltAngles or an (..., 2) array."""
    if isinstance(t, TiltAngles):
        return TiltAngles((t.ax - p.offset_x) * p.scale, (t.ay - p.offset_y) * p.scale)
    a = np.asarray(t, dtype=np.float64)
    return (a - [p.offset_x, p.offset_y]) * p.scale


def tilt_rmse(corrected, commanded) -> float:
    """Pooled RMSE over both angle components and all samples."""
    e = np.asarray(corrected, dtype=np.float64) - np.asarray(commanded, dtype=np.float64)
    if e.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean(np.sum(e * e, axis=-1) / 2)))


def evaluate_rmse_grid(
    diameters,
    alphas,
    params: CalibrationParams,
    setup: PipelineSetup,
    n: int = 36,
    push_depth: float = 10.0,
    seed: int = 0,
    threads: int = 1,
) -> RmseGrid:
    diameters, alphas = tuple(float(d) for d in diameters), tuple(float(a) for a in alphas)
    rmse = np.full((len(diameters), len(alphas)), np.nan)
    failed = np.zeros((len(diameters), len(alphas)), dtype=int)
    samples = {}
    for i, D in enumerate(diameters):
        for j, a in enumerate(alphas):
            s = run_sweep(SweepConfig(a, D, n, push_depth), setup, seed, EVALUATION_STAGE, threads)
            samples[(D, a)] = s
            failed[i, j] = s.failed
            if len(s):
                rmse[i, j] = tilt_rmse(apply_calibration(s.measured, params), s.commanded)
            log.info("D=%g alpha=%g rmse=%.3f failed=%d", D, a, rmse[i, j], s.failed)
    return RmseGrid(diameters, alphas, rmse, failed, samples)
