"""Footprint cropping, SVD plane fitting and the end-to-end normal estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detect import LoGParams, detect_markers
from .errors import DegenerateConfigurationError, DomainError, FrameMismatchError, InsufficientDataError
from .geometry import RigidTransform, TiltAngles, tilt_angles_from_normal
from .sim import StereoRig
from .stereo import PointCloud, StereoMatchParams, match_detections, transform_cloud, triangulate_pairs


@dataclass(frozen=True, eq=False)
class PlaneFit:
    """Plane ``a x + b y + c z + d = 0`` with unit normal ``(a, b, c)``, ``c > 0``."""

    normal: np.ndarray
    offset: float
    point_count: int
    rms_residual: float
    max_residual: float

    def height_at(self, x: float = 0.0, y: float = 0.0) -> float:
        a, b, c = self.normal
        return float(-(self.offset + a * x + b * y) / c)

    def push_depth(self, rest_height: float) -> float:
        """Depth of the plane below the undeformed membrane apex, on the jig axis."""
        return rest_height - self.height_at(0.0, 0.0)

    def to_dict(self) -> dict:
        tilt = tilt_angles_from_normal(self.normal)
        return {
            "normal": [float(v) for v in self.normal],
            "d_mm": float(self.offset),
            "ax_deg": tilt.ax,
            "ay_deg": tilt.ay,
            "point_count": int(self.point_count),
            "rms_residual_mm": float(self.rms_residual),
        }


@dataclass(frozen=True)
class CropSpec:
    crop_radius: float = 30.0
    margin_factor: float = 0.9

    def __post_init__(self):
        if not self.crop_radius > 0:
            raise DomainError("crop_radius must be > 0")
        if not 0 < self.margin_factor <= 1:
            raise DomainError("margin_factor must lie in (0, 1]")

    @classmethod
    def for_diameter(cls, diameter: float, margin_factor: float = 0.9) -> CropSpec:
        return cls(diameter / 2, margin_factor)


def crop_point_cloud(cloud: PointCloud, spec: CropSpec) -> PointCloud:
    if cloud.frame != "jig":
        raise FrameMismatchError("cropping needs a jig-frame cloud")
    p = cloud.points
    keep = np.hypot(p[:, 0], p[:, 1]) < spec.margin_factor * spec.crop_radius
    return PointCloud(p[keep], "jig")


def fit_plane_svd(cloud) -> PlaneFit:
    """Total-least-squares plane through a point cloud (or an (N, 3) array)."""
    p = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if len(p) < 3:
        raise InsufficientDataError(f"insufficient data: plane fit needs >= 3 points, got {len(p)}")
    centroid = p.mean(axis=0)
    q = p - centroid
    _, s, vt = np.linalg.svd(q, full_matrices=False)
    if s[1] <= 1e-9 * max(s[0], 1e-300):
        raise DegenerateConfigurationError("points are collinear")
    n = vt[-1]
    if n[2] < 0:
        n = -n
    d = -float(n @ centroid)
    r = p @ n + d
    return PlaneFit(n, d, len(p), float(np.sqrt(np.mean(r * r))), float(np.max(np.abs(r))))


def estimate_principal_normal(
    left,
    right,
    rig: StereoRig,
    detect_params: LoGParams,
    match_params: StereoMatchParams,
    crop: CropSpec,
    camera_to_jig: RigidTransform | None = None,
) -> tuple[np.ndarray, TiltAngles, PlaneFit]:
    """Image pair -> principal normal, raw tilt angles and the plane fit.

    ``camera_to_jig`` maps the rig midpoint frame into the jig frame; the rig's
    nominal mounting is used when omitted.
    """
    pairs = match_detections(detect_markers(left, detect_params), detect_markers(right, detect_params), match_params)
    cloud = triangulate_pairs(pairs, rig)
    if camera_to_jig is None:
        camera_to_jig = rig.pose_mid
    jig = transform_cloud(cloud, camera_to_jig, source="camera", target="jig")
    fit = fit_plane_svd(crop_point_cloud(jig, crop))
    return fit.normal, tilt_angles_from_normal(fit.normal), fit
