import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from softjig.errors import DomainError, ProjectionError
from softjig.geometry import angle_between_deg, normal_from_tilt_angles
from softjig.sim import (
    SPOT_PEAK,
    ContactSpec,
    JigGeometry,
    StereoRig,
    generate_marker_layout,
    generate_scene,
    in_footprint,
    membrane_height_field,
    object_plane_height,
    project_points,
    project_to_camera,
    render_image,
    rest_height,
)


def brute_force_hex_count(pitch, radius):
    row = pitch * math.sqrt(3) / 2
    count = 0
    for j in range(-1000, 1001):
        y = j * row
        if abs(y) > radius:
            continue
        for i in range(-1000, 1001):
            x = (i + 0.5 * (j % 2)) * pitch
            if x * x + y * y <= radius * radius:
                count += 1
    return count


class TestGeometryTypes:
    def test_defaults(self, geom, rig):
        assert geom.plate_side == 220 and geom.membrane_rest_height == 30
        assert rig.baseline == 30 and rig.camera_height == 150

    def test_overlapping_markers_rejected(self):
        with pytest.raises(DomainError):
            JigGeometry(marker_pitch=3.0, marker_radius=1.5)

    def test_collinear_fiducials_rejected(self):
        with pytest.raises(DomainError):
            JigGeometry(fiducial_positions=((0, 0), (10, 0), (20, 0), (0, 10)))

    def test_rectified_poses(self, rig):
        np.testing.assert_array_equal(rig.pose_left.rotation, rig.pose_right.rotation)
        np.testing.assert_allclose(rig.pose_right.translation - rig.pose_left.translation, [30, 0, 0])

    def test_contact_validation(self):
        with pytest.raises(DomainError):
            ContactSpec(tilt_alpha=45)
        with pytest.raises(DomainError):
            ContactSpec(object_diameter=0)


@pytest.fixture(scope="module")
def layout():
    return generate_marker_layout(JigGeometry(dome_radius=90, marker_pitch=6))


class TestMarkerLayout:
    def test_clipped(self, layout):
        assert np.all(np.hypot(layout[:, 0], layout[:, 1]) <= 90)

    def test_min_spacing(self, layout):
        assert pdist(layout).min() >= 6 - 1e-9

    def test_count_matches_enumeration(self, layout):
        assert len(layout) == brute_force_hex_count(6, 90)

    def test_deterministic(self):
        g = JigGeometry()
        np.testing.assert_array_equal(generate_marker_layout(g), generate_marker_layout(g))


class TestHeightField:
    def test_flat_contact_center(self, geom):
        c = ContactSpec(60, 0, 0, 5)
        assert membrane_height_field(geom, c, [0.0, 0.0]) == pytest.approx(25.0, abs=1e-12)

    def test_outside_footprint(self, geom):
        c = ContactSpec(60, 10, 0, 5)
        xy = np.array([70.0, -20.0])
        assert membrane_height_field(geom, c, xy) == rest_height(geom, xy)

    def test_tilted_contact_is_plane(self, geom):
        c = ContactSpec(60, 10, 0, 10)
        rng = np.random.default_rng(0)
        xy = rng.uniform(-18, 18, (200, 2))
        xy = xy[np.hypot(xy[:, 0], xy[:, 1]) < 20]
        pts = np.column_stack([xy, membrane_height_field(geom, c, xy)])
        _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
        n = vt[-1] * np.sign(vt[-1][2])
        assert angle_between_deg(n, [0, 0, 1]) == pytest.approx(10, abs=1e-9)
        # theta = 0: downhill along +x, so the normal leans to +x
        assert n[0] > 0 and abs(n[1]) < 1e-12

    def test_flat_contact_identical_heights(self, geom):
        c = ContactSpec(70, 0, 0, 10)
        xy = generate_marker_layout(geom)
        inside = in_footprint(geom, c, xy)
        z = membrane_height_field(geom, c, xy)[inside]
        assert inside.sum() > 50
        assert np.ptp(z) <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(30, 80),
        st.floats(0, 15),
        st.floats(0, 360),
        st.floats(10, 20),
    )
    def test_inner_disk_on_object_plane(self, diameter, alpha, theta, push):
        geom = JigGeometry()
        c = ContactSpec(diameter, alpha, theta, push)
        xy = generate_marker_layout(geom)
        inner = np.hypot(xy[:, 0], xy[:, 1]) < 0.9 * diameter / 2
        plane = object_plane_height(geom, c, xy[inner])
        # rim lift: where the tilted plane rises above the dome it cannot be on the plane
        touching = plane <= rest_height(geom, xy[inner])
        z = membrane_height_field(geom, c, xy[inner])
        assert np.all(np.abs(z[touching] - plane[touching]) < 1e-9)

    def test_rim_lift_for_large_tilt(self, geom):
        """Large objects tilted far leave part of the cropped rim out of contact."""
        c = ContactSpec(80, 20, 0, 10)
        xy = np.array([[-35.0, 0.0]])
        assert object_plane_height(geom, c, xy)[0] > rest_height(geom, xy)[0]


class TestProjection:
    def test_optical_axis(self, rig):
        p = rig.pose_left.apply([0, 0, 170])
        np.testing.assert_allclose(project_to_camera(p, rig, "left"), rig.principal_point, atol=1e-12)

    def test_known_offset(self, rig):
        # camera-frame (10, 0, 150), f = 600 -> 600 * 10 / 150 = 40 px right of centre
        p = rig.pose_left.apply([10, 0, 150])
        np.testing.assert_allclose(project_to_camera(p, rig, "left"), [320 + 40, 240], atol=1e-12)

    def test_behind_camera(self, rig):
        with pytest.raises(ProjectionError):
            project_to_camera([0, 0, -150], rig, "left")
        with pytest.raises(ProjectionError):
            project_to_camera([0, 0, -200], rig, "right")

    def test_rectified_rows_and_disparity(self, rig):
        rng = np.random.default_rng(3)
        pts = np.column_stack([rng.uniform(-60, 60, (500, 2)), rng.uniform(0, 30, 500)])
        uv_l, d_l = project_points(pts, rig, "left")
        uv_r, d_r = project_points(pts, rig, "right")
        np.testing.assert_allclose(uv_l[:, 1], uv_r[:, 1], atol=1e-9)
        np.testing.assert_allclose(uv_l[:, 0] - uv_r[:, 0], rig.focal_px * rig.baseline / d_l, atol=1e-9)


class TestRender:
    def test_empty(self, rig):
        img = render_image(np.zeros((0, 3)), rig, 2.0, 0.0)
        assert img.shape == (480, 640) and not img.any()

    def test_single_spot_argmax(self, rig):
        img = render_image([[320, 240, 150]], rig, 2.0)
        v, u = np.unravel_index(np.argmax(img), img.shape)
        assert (u, v) == (320, 240)
        assert img.max() == pytest.approx(SPOT_PEAK)

    def test_clamped(self, rig):
        img = render_image([[100, 100, 150]] * 5, rig, 2.0, noise_sigma=30, rng=np.random.default_rng(0))
        assert img.max() == 255 and img.min() == 0

    def test_depth_scales_spot(self, rig):
        near = render_image([[100, 100, 150]], rig, 2.0)
        far = render_image([[100, 100, 300]], rig, 2.0)
        assert near[100, 103] > far[100, 103]

    def test_blur_must_be_positive(self, rig):
        with pytest.raises(DomainError):
            render_image([[1, 1, 150]], rig, 0.0)


class TestScene:
    def test_vertical_contact_truth(self, geom, rig):
        s = generate_scene(geom, rig, ContactSpec(60, 0, 0, 10), noise_sigma=0, seed=0)
        np.testing.assert_array_equal(s.ground_truth_normal, [0, 0, 1])

    def test_deterministic(self, geom, rig):
        a = generate_scene(geom, rig, ContactSpec(50, 10, 45, 10), seed=7)
        b = generate_scene(geom, rig, ContactSpec(50, 10, 45, 10), seed=7)
        assert np.array_equal(a.image_left, b.image_left)
        assert np.array_equal(a.image_right, b.image_right)
        assert np.array_equal(a.true_marker_points, b.true_marker_points)

    def test_different_seed_different_noise(self, geom, rig):
        a = generate_scene(geom, rig, ContactSpec(), seed=1)
        b = generate_scene(geom, rig, ContactSpec(), seed=2)
        assert not np.array_equal(a.image_left, b.image_left)

    def test_truth_tilt_theta_90(self, geom, rig):
        s = generate_scene(geom, rig, ContactSpec(60, 10, 90, 10), noise_sigma=0, seed=0)
        assert s.ground_truth_tilt.ax == pytest.approx(10, abs=1e-9)
        assert s.ground_truth_tilt.ay == pytest.approx(0, abs=1e-9)

    def test_truth_normal_consistent(self, clean_scene):
        n = normal_from_tilt_angles(clean_scene.ground_truth_tilt)
        np.testing.assert_allclose(clean_scene.ground_truth_normal, n, atol=1e-9)

    def test_push_beyond_membrane_rejected(self, geom, rig):
        with pytest.raises(DomainError):
            generate_scene(geom, rig, ContactSpec(60, 0, 0, 30))

    def test_truth_dict(self, clean_scene):
        d = clean_scene.truth_dict()
        assert set(d) == {"alpha_deg", "theta_deg", "push_mm", "diameter_mm", "normal"}
        assert d["alpha_deg"] == 10 and len(d["normal"]) == 3
