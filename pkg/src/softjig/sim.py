"""Synthetic stand-in for the physical jig and its stereo camera pair.

The jig frame has its origin at the centre of the base plate with +z pointing
up into the membrane. Both cameras sit ``camera_height`` below the plate and
look straight up, so their optical axes are parallel to jig +z and camera x/y
coincide with jig x/y. A marker at height ``z`` is therefore seen at depth
``camera_height + z``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DomainError, ProjectionError
from .geometry import (
    RigidTransform,
    TiltAngles,
    normal_from_tilt_direction,
    tilt_angles_from_normal,
)

SPOT_PEAK = 200.0

Side = Literal["left", "right"]


def _default_fiducials():
    return ((-60.0, -50.0), (60.0, -50.0), (60.0, 50.0), (-60.0, 50.0))


@dataclass(frozen=True)
class JigGeometry:
    plate_side: float = 220.0
    membrane_rest_height: float = 30.0
    dome_radius: float = 80.0
    marker_pitch: float = 6.0
    marker_radius: float = 1.5
    fiducial_positions: tuple = field(default_factory=_default_fiducials)

    def __post_init__(self):
        for name in ("plate_side", "membrane_rest_height", "dome_radius", "marker_pitch", "marker_radius"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        if not self.marker_pitch > 2 * self.marker_radius:
            raise DomainError("marker_pitch must exceed 2 * marker_radius")
        fid = np.asarray(self.fiducial_positions, dtype=np.float64)
        if fid.shape != (4, 2):
            raise DomainError("fiducial_positions must be 4 planar points")
        if np.any(np.abs(fid) > self.plate_side / 2):
            raise DomainError("fiducial_positions must lie on the base plate")
        if not _non_collinear(fid):
            raise DomainError("fiducial_positions must not be collinear")
        object.__setattr__(self, "fiducial_positions", tuple(tuple(map(float, p)) for p in fid))

    @property
    def fiducials_3d(self) -> np.ndarray:
        fid = np.asarray(self.fiducial_positions)
        return np.column_stack([fid, np.zeros(len(fid))])


def _non_collinear(pts: np.ndarray, tol: float = 1e-6) -> bool:
    """True when no three of ``pts`` are collinear."""
    scale = max(np.ptp(pts, axis=0).max(), 1e-12)
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                a, b = pts[j] - pts[i], pts[k] - pts[i]
                if abs(a[0] * b[1] - a[1] * b[0]) <= tol * scale**2:
                    return False
    return True


@dataclass(frozen=True)
class StereoRig:
    """Rectified pinhole pair; poses map camera coordinates to the jig frame."""

    focal_px: float = 600.0
    principal_point: tuple = (320.0, 240.0)
    resolution: tuple = (640, 480)
    baseline: float = 30.0
    camera_height: float = 150.0

    def __post_init__(self):
        if not self.focal_px > 0:
            raise DomainError("focal_px must be > 0")
        if not self.baseline > 0:
            raise DomainError("baseline must be > 0")
        if not self.camera_height > 0:
            raise DomainError("camera_height must be > 0")
        w, h = self.resolution
        if int(w) != w or int(h) != h or w <= 0 or h <= 0:
            raise DomainError("resolution must be positive integers")
        object.__setattr__(self, "principal_point", tuple(map(float, self.principal_point)))
        object.__setattr__(self, "resolution", (int(w), int(h)))

    @property
    def K(self) -> np.ndarray:
        cx, cy = self.principal_point
        return np.array([[self.focal_px, 0.0, cx], [0.0, self.focal_px, cy], [0.0, 0.0, 1.0]])

    @property
    def pose_mid(self) -> RigidTransform:
        """Rig midpoint frame -> jig frame."""
        return RigidTransform(np.eye(3), [0.0, 0.0, -self.camera_height])

    @property
    def pose_left(self) -> RigidTransform:
        return RigidTransform(np.eye(3), [-self.baseline / 2, 0.0, -self.camera_height])

    @property
    def pose_right(self) -> RigidTransform:
        left = self.pose_left
        return RigidTransform(
            left.rotation, left.translation + left.rotation @ [self.baseline, 0.0, 0.0]
        )

    def pose(self, side: Side) -> RigidTransform:
        if side == "left":
            return self.pose_left
        if side == "right":
            return self.pose_right
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")


@dataclass(frozen=True)
class ContactSpec:
    object_diameter: float = 60.0
    tilt_alpha: float = 0.0
    tilt_direction: float = 0.0
    push_depth: float = 10.0

    def __post_init__(self):
        if not self.object_diameter > 0:
            raise DomainError("object_diameter must be > 0")
        if not 0 <= self.tilt_alpha < 45:
            raise DomainError("tilt_alpha must lie in [0, 45) deg")
        if not self.push_depth > 0:
            raise DomainError("push_depth must be > 0")

    @property
    def normal(self) -> np.ndarray:
        return normal_from_tilt_direction(self.tilt_alpha, self.tilt_direction)


@dataclass(frozen=True, eq=False)
class SceneFrame:
    image_left: np.ndarray
    image_right: np.ndarray
    true_marker_points: np.ndarray
    ground_truth_normal: np.ndarray
    ground_truth_tilt: TiltAngles
    contact: ContactSpec
    pixels_left: np.ndarray
    pixels_right: np.ndarray
    fiducial_pixels_left: np.ndarray
    fiducial_pixels_right: np.ndarray

    def truth_dict(self) -> dict:
        return {
            "alpha_deg": self.contact.tilt_alpha,
            "theta_deg": self.contact.tilt_direction,
            "push_mm": self.contact.push_depth,
            "diameter_mm": self.contact.object_diameter,
            "normal": [float(v) for v in self.ground_truth_normal],
        }


def generate_marker_layout(geom: JigGeometry) -> np.ndarray:
    """Hexagonal grid of marker centres clipped to the dome footprint, (N, 2) in mm."""
    p = geom.marker_pitch
    row = p * np.sqrt(3) / 2
    nj = int(np.ceil(geom.dome_radius / row)) + 1
    ni = int(np.ceil(geom.dome_radius / p)) + 1
    j, i = np.mgrid[-nj : nj + 1, -ni : ni + 1]
    x = (i + 0.5 * (j % 2)) * p
    y = j * row
    pts = np.column_stack([x.ravel(), y.ravel()])
    keep = np.hypot(pts[:, 0], pts[:, 1]) <= geom.dome_radius
    return pts[keep]


def rest_height(geom: JigGeometry, xy) -> np.ndarray:
    """Undeformed dome: flat-topped super-Gaussian of the radial distance."""
    xy = np.asarray(xy, dtype=np.float64)
    r = np.hypot(xy[..., 0], xy[..., 1])
    return geom.membrane_rest_height * np.exp(-((r / geom.dome_radius) ** 4))


def object_plane_height(geom: JigGeometry, contact: ContactSpec, xy) -> np.ndarray:
    """Height of the object's bottom plane, pivoting about the jig axis."""
    xy = np.asarray(xy, dtype=np.float64)
    h0 = geom.membrane_rest_height - contact.push_depth
    a, t = np.radians(contact.tilt_alpha), np.radians(contact.tilt_direction)
    return h0 - np.tan(a) * (xy[..., 0] * np.cos(t) + xy[..., 1] * np.sin(t))


def in_footprint(geom: JigGeometry, contact: ContactSpec, xy) -> np.ndarray:
    """Whether ``xy`` lies under the vertical projection of the object's bottom disk."""
    xy = np.asarray(xy, dtype=np.float64)
    dz = object_plane_height(geom, contact, xy) - (geom.membrane_rest_height - contact.push_depth)
    return xy[..., 0] ** 2 + xy[..., 1] ** 2 + dz**2 <= (contact.object_diameter / 2) ** 2


def membrane_height_field(geom: JigGeometry, contact: ContactSpec, xy) -> np.ndarray:
    rest = rest_height(geom, xy)
    pressed = np.minimum(rest, object_plane_height(geom, contact, xy))
    return np.where(in_footprint(geom, contact, xy), pressed, rest)


def project_points(points, rig: StereoRig, side: Side) -> tuple[np.ndarray, np.ndarray]:
    """Pinhole projection of jig-frame points; returns ((N, 2) pixels, (N,) depths)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cam = rig.pose(side).inverse().apply(pts)
    depth = cam[:, 2]
    if np.any(depth <= 0):
        raise ProjectionError("point at or behind the camera")
    cx, cy = rig.principal_point
    uv = np.column_stack([cx + rig.focal_px * cam[:, 0] / depth, cy + rig.focal_px * cam[:, 1] / depth])
    return uv, depth


def project_to_camera(point, rig: StereoRig, side: Side) -> np.ndarray:
    uv, _ = project_points(point, rig, side)
    return uv[0]


def render_image(
    projections,
    rig: StereoRig,
    blur_sigma: float,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    reference_depth: float | None = None,
) -> np.ndarray:
    """Render marker spots as depth-scaled Gaussian blobs on a black background.

    ``projections`` is an (N, 3) array of ``(u, v, depth)``. The spot standard
    deviation is ``blur_sigma * reference_depth / depth`` (reference defaults to
    the camera height). Returns a float (H, W) image clamped to [0, 255].
    """
    if not blur_sigma > 0:
        raise DomainError("blur_sigma must be > 0")
    w, h = rig.resolution
    ref = rig.camera_height if reference_depth is None else reference_depth
    proj = np.asarray(projections, dtype=np.float64).reshape(-1, 3)
    s = blur_sigma * ref / proj[:, 2]
    near = (proj[:, 0] > -4 * s - 1) & (proj[:, 0] < w + 4 * s) & (proj[:, 1] > -4 * s - 1) & (proj[:, 1] < h + 4 * s)
    proj, s = proj[near], s[near]
    if len(proj) == 0:
        img = np.zeros((h, w))
    else:
        # fixed-size windows of +-4 sigma, accumulated in spot order
        r = int(np.ceil(4 * s.max()))
        k = np.arange(-r, r + 1)
        cu = np.rint(proj[:, 0]).astype(int)[:, None] + k
        cv = np.rint(proj[:, 1]).astype(int)[:, None] + k
        gx = np.exp(-((cu - proj[:, 0:1]) ** 2) / (2 * s[:, None] ** 2))
        gy = np.exp(-((cv - proj[:, 1:2]) ** 2) / (2 * s[:, None] ** 2))
        gx[np.abs(cu - proj[:, 0:1]) > 4 * s[:, None]] = 0.0
        gy[np.abs(cv - proj[:, 1:2]) > 4 * s[:, None]] = 0.0
        vals = SPOT_PEAK * gy[:, :, None] * gx[:, None, :]
        uu = np.broadcast_to(cu[:, None, :], vals.shape)
        vv = np.broadcast_to(cv[:, :, None], vals.shape)
        inside = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        img = np.bincount((vv * w + uu)[inside], weights=vals[inside], minlength=h * w).reshape(h, w)
    if noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng()
        img += rng.normal(0.0, noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 255.0)


def generate_scene(
    geom: JigGeometry,
    rig: StereoRig,
    contact: ContactSpec,
    blur_sigma: float = 2.0,
    noise_sigma: float = 2.0,
    seed=None,
) -> SceneFrame:
    """Press the object into the membrane and render both camera views.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if not contact.push_depth < geom.membrane_rest_height:
        raise DomainError("push_depth must be below membrane_rest_height")
    rng = np.random.default_rng(seed)
    xy = generate_marker_layout(geom)
    pts = np.column_stack([xy, membrane_height_field(geom, contact, xy)])
    uv_l, d_l = project_points(pts, rig, "left")
    uv_r, d_r = project_points(pts, rig, "right")
    img_l = render_image(np.column_stack([uv_l, d_l]), rig, blur_sigma, noise_sigma, rng)
    img_r = render_image(np.column_stack([uv_r, d_r]), rig, blur_sigma, noise_sigma, rng)
    normal = contact.normal
    fid = geom.fiducials_3d
    return SceneFrame(
        image_left=img_l,
        image_right=img_r,
        true_marker_points=pts,
        ground_truth_normal=normal,
        ground_truth_tilt=tilt_angles_from_normal(normal),
        contact=contact,
        pixels_left=uv_l,
        pixels_right=uv_r,
        fiducial_pixels_left=project_points(fid, rig, "left")[0],
        fiducial_pixels_right=project_points(fid, rig, "right")[0],
    )
