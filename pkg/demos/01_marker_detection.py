"""
Finding membrane markers in one camera image
============================================

Render a pressed membrane, run the LoG blob detector and compare the
sub-pixel centres with the simulator's exact projections.
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from softjig import ContactSpec, JigGeometry, LoGParams, StereoRig, detect_markers, generate_scene
from softjig.detect import log_filter

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

geom, rig = JigGeometry(), StereoRig()
scene = generate_scene(geom, rig, ContactSpec(60, 10, 45, 10), blur_sigma=2.0, noise_sigma=2.0, seed=1)
img = scene.image_left

# the filter scale matches the rendered spot size
params = LoGParams(sigma=2.0)
resp = log_filter(img, params.sigma)
dets = detect_markers(img, params)
print(f"{len(dets)} markers detected, {len(scene.pixels_left)} in the layout")

# nearest true projection for every detection
found = np.array([d.center for d in dets])
dist = np.linalg.norm(found[:, None] - scene.pixels_left[None], axis=2).min(axis=1)
print(f"localisation error: median {np.median(dist):.3f} px, 95th pct {np.percentile(dist, 95):.3f} px")

fig, ax = plt.subplots(1, 2, figsize=(11, 4))
ax[0].imshow(img, cmap="gray")
ax[0].plot(found[:, 0], found[:, 1], "r+", ms=4)
ax[0].set_title("left image with detections")
ax[1].imshow(resp, cmap="magma")
ax[1].set_title("LoG response")
for a in ax:
    a.axis("off")
fig.tight_layout()
fig.savefig(out / "01_detections.png", dpi=100)
