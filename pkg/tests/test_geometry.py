from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from softjig.errors import DomainError
from softjig.geometry import (
    RigidTransform,
    TiltAngles,
    compose,
    invert,
    normal_from_tilt_angles,
    normal_from_tilt_direction,
    principal_normal_from_rotation,
    relative_pose,
    rot_x,
    rot_y,
    rot_z,
    tilt_angles_from_normal,
)

seeds = st.integers(0, 2**32 - 1)


def random_transform(seed):
    rng = np.random.default_rng(seed)
    R = Rotation.random(random_state=rng).as_matrix()
    return RigidTransform(R, rng.uniform(-200, 200, 3))


def test_rotation_convention():
    np.testing.assert_allclose(rot_x(90) @ [0, 0, 1], [0, -1, 0], atol=1e-15)
    np.testing.assert_allclose(rot_y(90) @ [0, 0, 1], [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(rot_z(90) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_rejects_non_orthonormal():
    with pytest.raises(DomainError):
        RigidTransform(np.diag([1.0, 1.0, 1.1]), np.zeros(3))
    with pytest.raises(DomainError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


class TestCompose:
    def test_identity(self):
        t = random_transform(1)
        assert compose(RigidTransform.identity(), t).allclose(t, 0)
        assert compose(t, RigidTransform.identity()).allclose(t, 0)

    def test_pure_translation(self):
        a = RigidTransform(np.eye(3), [1, 0, 0])
        b = RigidTransform(np.eye(3), [0, 2, 0])
        np.testing.assert_array_equal(compose(a, b).translation, [1, 2, 0])
        np.testing.assert_array_equal(compose(a, b).rotation, np.eye(3))

    def test_rot_z_twice(self):
        q = RigidTransform(rot_z(90), np.zeros(3))
        np.testing.assert_allclose(compose(q, q).rotation, rot_z(180), atol=1e-12)

    def test_matches_homogeneous_product(self):
        a, b = random_transform(2), random_transform(3)
        np.testing.assert_allclose(compose(a, b).matrix, a.matrix @ b.matrix, atol=1e-12)

    @settings(max_examples=50)
    @given(seeds, seeds, seeds)
    def test_associative(self, s1, s2, s3):
        a, b, c = random_transform(s1), random_transform(s2), random_transform(s3)
        assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)), 1e-9)


class TestInvert:
    def test_identity(self):
        assert invert(RigidTransform.identity()).allclose(RigidTransform.identity(), 0)

    def test_translation(self):
        np.testing.assert_array_equal(invert(RigidTransform(np.eye(3), [3, 4, 5])).translation, [-3, -4, -5])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_matrix_inverse(self, seed):
        t = random_transform(seed)
        np.testing.assert_allclose(invert(t).matrix, np.linalg.inv(t.matrix), atol=1e-9)
        assert compose(t, invert(t)).allclose(RigidTransform.identity(), 1e-9)

    @settings(max_examples=50)
    @given(seeds)
    def test_involution(self, s):
        t = random_transform(s)
        assert invert(invert(t)).allclose(t, 1e-9)


class TestRelativePose:
    def test_identity_jig(self):
        obj = random_transform(4)
        assert relative_pose(RigidTransform.identity(), obj).allclose(obj, 1e-12)

    def test_same_pose(self):
        t = random_transform(5)
        assert relative_pose(t, t).allclose(RigidTransform.identity(), 1e-9)

    def test_rotation_chain(self):
        jig = RigidTransform(rot_z(30), np.zeros(3))
        obj = RigidTransform(rot_z(30) @ rot_x(10), np.zeros(3))
        oracle = np.linalg.inv(jig.matrix) @ obj.matrix
        d = relative_pose(jig, obj)
        np.testing.assert_allclose(d.matrix, oracle, atol=1e-12)
        np.testing.assert_allclose(d.rotation, rot_x(10), atol=1e-9)


class TestPrincipalNormal:
    def test_identity(self):
        np.testing.assert_array_equal(principal_normal_from_rotation(np.eye(3)), [0, 0, 1])

    @pytest.mark.parametrize("theta", [0, 17, 90, 233])
    def test_z_rotation_fixes_axis(self, theta):
        np.testing.assert_allclose(principal_normal_from_rotation(rot_z(theta)), [0, 0, 1], atol=1e-15)

    def test_rot_x_10(self):
        # frozen from cos/sin of 10 deg: (0, -0.173648, 0.984808)
        np.testing.assert_allclose(principal_normal_from_rotation(rot_x(10)), [0, -0.17365, 0.98481], atol=1e-5)

    @settings(max_examples=50)
    @given(seeds)
    def test_unit_norm(self, s):
        n = principal_normal_from_rotation(random_transform(s).rotation)
        assert abs(np.linalg.norm(n) - 1) < 1e-12


class TestTilt:
    def test_vertical(self):
        assert tilt_angles_from_normal([0, 0, 1]) == TiltAngles(0.0, 0.0)

    def test_yz_tilt(self):
        t = tilt_angles_from_normal([0, np.sin(np.radians(10)), np.cos(np.radians(10))])
        assert t.ax == pytest.approx(10, abs=1e-12)
        assert t.ay == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("polar,azimuth", [(5, 10), (12, 200), (30, -75), (44, 135)])
    def test_general_normal_against_trig(self, polar, azimuth):
        p, a = np.radians(polar), np.radians(azimuth)
        n = np.array([np.sin(p) * np.cos(a), np.sin(p) * np.sin(a), np.cos(p)])
        # n_z > 0, so the projected angle is a plain arctangent of the ratio
        ax = np.degrees(np.arctan(np.tan(p) * np.sin(a)))
        ay = np.degrees(np.arctan(np.tan(p) * np.cos(a)))
        t = tilt_angles_from_normal(n)
        assert t.ax == pytest.approx(ax, abs=1e-9)
        assert t.ay == pytest.approx(ay, abs=1e-9)

    def test_non_positive_z_rejected(self):
        with pytest.raises(DomainError):
            tilt_angles_from_normal([1, 0, 0])
        with pytest.raises(DomainError):
            tilt_angles_from_normal([0, 0.1, -1])

    def test_inverse_examples(self):
        np.testing.assert_allclose(normal_from_tilt_angles(TiltAngles(0, 0)), [0, 0, 1])
        s, c = np.sin(np.radians(10)), np.cos(np.radians(10))
        np.testing.assert_allclose(normal_from_tilt_angles(TiltAngles(10, 0)), [0, s, c], atol=1e-15)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            normal_from_tilt_angles(SimpleNamespace(ax=95.0, ay=0.0))
        with pytest.raises(DomainError):
            TiltAngles(90, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip_random(self, seed):
        rng = np.random.default_rng(seed)
        for ax, ay in rng.uniform(-45, 45, (20, 2)):
            t = tilt_angles_from_normal(normal_from_tilt_angles(TiltAngles(ax, ay)))
            assert t.ax == pytest.approx(ax, abs=1e-9) and t.ay == pytest.approx(ay, abs=1e-9)

    @given(st.floats(-89, 89), st.floats(-89, 89))
    def test_round_trip_property(self, ax, ay):
        t = tilt_angles_from_normal(normal_from_tilt_angles(TiltAngles(ax, ay)))
        assert abs(t.ax - ax) < 1e-9 and abs(t.ay - ay) < 1e-9

    def test_tilt_direction_convention(self):
        # theta = 90 deg: downhill along +y, normal leans to +y
        n = normal_from_tilt_direction(10, 90)
        t = tilt_angles_from_normal(n)
        assert t.ax == pytest.approx(10, abs=1e-9) and t.ay == pytest.approx(0, abs=1e-9)
