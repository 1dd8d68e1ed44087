"""Rigid transforms, normal vectors and the tilt-angle parameterization.

Conventions used throughout the package:

* rotations are right-handed and active, so ``rot_x(t) @ (0, 0, 1)`` is
  ``(0, -sin t, cos t)``;
* a tilt pair ``(ax, ay)`` is the normal projected onto the YZ and XZ planes,
  ``ax = atan2(n_y, n_z)`` and ``ay = atan2(n_x, n_z)``, in degrees.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_ORTHO_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation plus translation (mm) mapping source-frame points to a target frame.

    ``apply(p) = rotation @ p + translation``.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = _frozen(self.rotation)
        t = _frozen(self.translation).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise DomainError("rotation must be 3x3 and translation a 3-vector")
        if not np.all(np.abs(R.T @ R - np.eye(3)) <= _ORTHO_TOL):
            raise DomainError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise DomainError("rotation has determinant != +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_matrix(cls, m) -> RigidTransform:
        m = np.asarray(m, dtype=np.float64)
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points) -> np.ndarray:
        """Map a 3-vector or an (N, 3) array of points."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> RigidTransform:
        return invert(self)

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return compose(self, other)

    def allclose(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0, atol=atol)
        )

    def __repr__(self):
        return (
            f"RigidTransform(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


@dataclass(frozen=True)
class TiltAngles:
    """Normal orientation as (YZ-plane angle, XZ-plane angle) in degrees."""

    ax: float
    ay: float

    def __post_init__(self):
        if not (abs(self.ax) < 90.0 and abs(self.ay) < 90.0):
            raise DomainError(f"tilt angles must lie in (-90, 90) deg, got {self.ax}, {self.ay}")

    def as_array(self) -> np.ndarray:
        return np.array([self.ax, self.ay])


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Homogeneous product ``a @ b``: apply ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    Rt = t.rotation.T
    return RigidTransform(Rt, -Rt @ t.translation)


def relative_pose(jig: RigidTransform, obj: RigidTransform) -> RigidTransform:
    """Object pose expressed in the jig frame, ``jig^-1 @ obj``."""
    return compose(invert(jig), obj)


def rot_x(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("cannot normalize a zero vector")
    return v / n


def principal_normal_from_rotation(r) -> np.ndarray:
    """The rotated z axis, i.e. the bottom-face normal of a body with pose ``r``."""
    n = np.asarray(r, dtype=np.float64) @ np.array([0.0, 0.0, 1.0])
    return n / np.linalg.norm(n)


def tilt_angles_from_normal(n) -> TiltAngles:
    n = np.asarray(n, dtype=np.float64)
    if not n[2] > 0:
        raise DomainError("normal must have a positive z component")
    return TiltAngles(
        float(np.degrees(np.arctan2(n[1], n[2]))),
        float(np.degrees(np.arctan2(n[0], n[2]))),
    )


def normal_from_tilt_angles(t: TiltAngles) -> np.ndarray:
    if not (abs(t.ax) < 90.0 and abs(t.ay) < 90.0):
        raise DomainError("tilt angles must lie in (-90, 90) deg")
    v = np.array([np.tan(np.radians(t.ay)), np.tan(np.radians(t.ax)), 1.0])
    return v / np.linalg.norm(v)


def normal_from_tilt_direction(alpha_deg: float, theta_deg: float) -> np.ndarray:
    """Normal of a plane tilted by ``alpha`` whose downhill direction is ``theta``.

    ``theta`` is measured counterclockwise from +x seen from above; the normal
    leans toward the downhill side.
    """
    a, t = np.radians(alpha_deg), np.radians(theta_deg)
    return np.array([np.sin(a) * np.cos(t), np.sin(a) * np.sin(t), np.cos(a)])


def angle_between_deg(a, b) -> float:
    a, b = unit(a), unit(b)
    return float(np.degrees(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b))))
