"""Stereo matching, triangulation, jig registration and point-cloud transforms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detect import MarkerDetection
from .errors import (
    DegenerateConfigurationError,
    DomainError,
    FrameMismatchError,
    TriangulationError,
)
from .geometry import RigidTransform
from .sim import JigGeometry, StereoRig, _non_collinear

FRAMES = ("camera", "jig")


@dataclass(frozen=True)
class StereoMatchParams:
    max_row_diff: float = 1.0
    min_disparity: float = 97.0
    max_disparity: float = 125.0

    def __post_init__(self):
        if not self.max_row_diff >= 0:
            raise DomainError("max_row_diff must be >= 0")
        if not 0 < self.min_disparity < self.max_disparity:
            raise DomainError("need 0 < min_disparity < max_disparity")

    @classmethod
    def for_rig(
        cls, rig: StereoRig, geom: JigGeometry, max_row_diff: float = 1.0, slack: float = 5.0
    ) -> StereoMatchParams:
        """Disparity window covering markers from the plate up to the dome apex, +-slack mm."""
        fb = rig.focal_px * rig.baseline
        near = rig.camera_height - slack
        far = rig.camera_height + geom.membrane_rest_height + slack
        return cls(max_row_diff, fb / far, fb / near)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    frame: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.frame not in FRAMES:
            raise DomainError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if self.frame == "camera" and np.any(pts[:, 2] <= 0):
            raise DomainError("camera-frame points must have positive depth")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def match_detections(
    left: list[MarkerDetection], right: list[MarkerDetection], params: StereoMatchParams
) -> list[tuple[MarkerDetection, MarkerDetection]]:
    """One-to-one greedy matching along rectified rows.

    Candidates must satisfy the row and disparity windows. They are accepted
    in order of row difference (whole-pixel bins), then distance of their
    disparity from the median candidate disparity, then exact row difference.
    Output is sorted by left row, then left column.
    """
    if not left or not right:
        return []
    L = np.array([(d.u, d.v) for d in left])
    R = np.array([(d.u, d.v) for d in right])
    dv = np.abs(L[:, None, 1] - R[None, :, 1])
    disp = L[:, None, 0] - R[None, :, 0]
    ok = (dv <= params.max_row_diff) & (disp >= params.min_disparity) & (disp <= params.max_disparity)
    li, ri = np.nonzero(ok)
    if len(li) == 0:
        return []
    cand_dv = dv[li, ri]
    cand_disp = disp[li, ri]
    dev = np.abs(cand_disp - np.median(cand_disp))
    order = np.lexsort((ri, li, cand_dv, dev, np.floor(cand_dv)))
    used_l, used_r, pairs = set(), set(), []
    for k in order:
        a, b = int(li[k]), int(ri[k])
        if a in used_l or b in used_r:
            continue
        used_l.add(a)
        used_r.add(b)
        pairs.append((a, b))
    pairs.sort(key=lambda ab: (left[ab[0]].v, left[ab[0]].u))
    return [(left[a], right[b]) for a, b in pairs]


def triangulate_uv(ul, vl, ur, vr, rig: StereoRig) -> np.ndarray:
    """Vectorized triangulation into the rig midpoint frame, (N, 3) in mm."""
    ul, vl, ur, vr = (np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in (ul, vl, ur, vr))
    d = ul - ur
    if np.any(d <= 0):
        raise TriangulationError("disparity must be positive")
    cx, cy = rig.principal_point
    f = rig.focal_px
    z = f * rig.baseline / d
    x = ((ul + ur) / 2 - cx) * z / f
    y = ((vl + vr) / 2 - cy) * z / f
    return np.column_stack([x, y, z])


def triangulate(pair, rig: StereoRig) -> np.ndarray:
    """3D point (rig midpoint frame) for a matched ``(left, right)`` pair.

    Each side may be a :class:`MarkerDetection` or a ``(u, v)`` pair.
    """
    a, b = (p.center if isinstance(p, MarkerDetection) else np.asarray(p, dtype=np.float64) for p in pair)
    return triangulate_uv(a[0], a[1], b[0], b[1], rig)[0]


def triangulate_pairs(pairs, rig: StereoRig) -> PointCloud:
    if not pairs:
        return PointCloud(np.zeros((0, 3)), "camera")
    uv = np.array([(a.u, a.v, b.u, b.v) for a, b in pairs])
    return PointCloud(triangulate_uv(uv[:, 0], uv[:, 1], uv[:, 2], uv[:, 3], rig), "camera")


def transform_cloud(cloud: PointCloud, t: RigidTransform, *, source: str, target: str) -> PointCloud:
    if cloud.frame != source:
        raise FrameMismatchError(f"cloud is in {cloud.frame!r} frame, transform expects {source!r}")
    return PointCloud(t.apply(cloud.points) if len(cloud) else cloud.points, target)


def _normalization(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    s = np.sqrt(2) / np.mean(np.linalg.norm(pts - c, axis=1))
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1]])


def homography_dlt(src, dst) -> np.ndarray:
    """Normalized DLT homography mapping planar ``src`` points to ``dst`` pixels."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    Ts, Td = _normalization(src), _normalization(dst)
    s = np.column_stack([src, np.ones(len(src))]) @ Ts.T
    d = np.column_stack([dst, np.ones(len(dst))]) @ Td.T
    rows = []
    for (x, y, w), (u, v, q) in zip(s, d):
        rows.append([0, 0, 0, -q * x, -q * y, -q * w, v * x, v * y, v * w])
        rows.append([q * x, q * y, q * w, 0, 0, 0, -u * x, -u * y, -u * w])
    _, _, vt = np.linalg.svd(np.asarray(rows))
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    return H / np.linalg.norm(H)


def estimate_jig_pose_pnp(fiducial_pixels, fiducial_model, K) -> RigidTransform:
    """Pose of the plate (jig -> camera) from four or more coplanar fiducials.

    ``fiducial_model`` holds plate coordinates, either (N, 2) or (N, 3) with z = 0.
    """
    px = np.asarray(fiducial_pixels, dtype=np.float64).reshape(-1, 2)
    model = np.asarray(fiducial_model, dtype=np.float64)
    if model.shape[1] == 3:
        if np.any(np.abs(model[:, 2]) > 1e-9):
            raise DegenerateConfigurationError("fiducial model points must lie on z = 0")
        model = model[:, :2]
    if len(model) < 4 or len(px) != len(model):
        raise DegenerateConfigurationError("need at least 4 matching fiducial correspondences")
    if not _non_collinear(model) or not _non_collinear(px):
        raise DegenerateConfigurationError("fiducial points are collinear or duplicated")
    K = np.asarray(K, dtype=np.float64)
    A = np.linalg.inv(K) @ homography_dlt(model, px)
    lam = 2.0 / (np.linalg.norm(A[:, 0]) + np.linalg.norm(A[:, 1]))
    for sign in (1.0, -1.0):
        r1, r2, t = (sign * lam * A[:, i] for i in range(3))
        u, _, vt = np.linalg.svd(np.column_stack([r1, r2, np.cross(r1, r2)]))
        R = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
        cam = np.column_stack([model, np.zeros(len(model))]) @ R.T + t
        if np.all(cam[:, 2] > 0):
            return RigidTransform(R, t)
    raise DegenerateConfigurationError("no pose places all fiducials in front of the camera")


def reprojection_residual(pose: RigidTransform, fiducial_pixels, fiducial_model, K) -> float:
    """Max pixel distance between observed fiducials and their reprojection."""
    model = np.asarray(fiducial_model, dtype=np.float64)
    if model.shape[1] == 2:
        model = np.column_stack([model, np.zeros(len(model))])
    cam = pose.apply(model) @ np.asarray(K).T
    uv = cam[:, :2] / cam[:, 2:]
    return float(np.max(np.linalg.norm(uv - np.asarray(fiducial_pixels), axis=1)))


def camera_to_jig_from_pnp(rig: StereoRig, fiducial_pixels_left, geom: JigGeometry) -> RigidTransform:
    """Rig-midpoint -> jig transform registered from fiducials seen by the left camera."""
    jig_to_left = estimate_jig_pose_pnp(fiducial_pixels_left, geom.fiducial_positions, rig.K)
    mid_to_left = RigidTransform(np.eye(3), [rig.baseline / 2, 0.0, 0.0])
    return jig_to_left.inverse() @ mid_to_left
