"""
From a stereo pair to the contact normal
========================================

Match detections across the rectified pair, triangulate them, move the
cloud into the jig frame and fit a plane to the markers under the object.
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from softjig import (
    ContactSpec,
    CropSpec,
    JigGeometry,
    LoGParams,
    StereoMatchParams,
    StereoRig,
    angle_between_deg,
    crop_point_cloud,
    detect_markers,
    fit_plane_svd,
    generate_scene,
    match_detections,
    transform_cloud,
    triangulate_pairs,
)
from softjig.stereo import camera_to_jig_from_pnp

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

geom, rig = JigGeometry(), StereoRig()
contact = ContactSpec(object_diameter=50, tilt_alpha=12, tilt_direction=120, push_depth=10)
scene = generate_scene(geom, rig, contact, seed=3)

params = LoGParams()
pairs = match_detections(
    detect_markers(scene.image_left, params),
    detect_markers(scene.image_right, params),
    StereoMatchParams.for_rig(rig, geom),
)
cloud = triangulate_pairs(pairs, rig)
print(f"{len(pairs)} stereo pairs")

# Register with the plate fiducials instead of trusting the nominal mount.
to_jig = camera_to_jig_from_pnp(rig, scene.fiducial_pixels_left, geom)
print("registration vs nominal mount, translation diff (mm):", np.round(to_jig.translation - rig.pose_mid.translation, 6))
jig = transform_cloud(cloud, to_jig, source="camera", target="jig")

inner = crop_point_cloud(jig, CropSpec.for_diameter(contact.object_diameter))
fit = fit_plane_svd(inner)
print(f"plane from {fit.point_count} points, rms residual {fit.rms_residual:.4f} mm")
print(f"estimated normal {np.round(fit.normal, 4)}, truth {np.round(scene.ground_truth_normal, 4)}")
print(f"angular error {angle_between_deg(fit.normal, scene.ground_truth_normal):.3f} deg, push {fit.push_depth(geom.membrane_rest_height):.2f} mm")

fig = plt.figure(figsize=(6, 5))
ax = fig.add_subplot(projection="3d")
p, q = jig.points, inner.points
ax.scatter(p[:, 0], p[:, 1], p[:, 2], s=2, c="0.6")
ax.scatter(q[:, 0], q[:, 1], q[:, 2], s=5, c="C3")
ax.set_xlabel("x (mm)")
ax.set_ylabel("y (mm)")
ax.set_zlabel("z (mm)")
fig.savefig(out / "02_cloud.png", dpi=100)
