"""Readers and writers for images, detections, clouds, calibration and grids."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .calibration import CalibrationParams, CalibrationSamples, RmseGrid
from .detect import MarkerDetection
from .stereo import PointCloud


def write_pgm(path, img) -> None:
    """8-bit binary PGM (P5); intensities are rounded and clamped to [0, 255]."""
    a = np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)
    h, w = a.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(a.tobytes())


def _pgm_tokens(data: bytes):
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data)
    if magic != "P5":
        raise ValueError(f"{path}: not a binary PGM (magic {magic!r})")
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    a = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return a.astype(np.float64) * (255.0 / maxval)


def write_detections_csv(path, dets: list[MarkerDetection]) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["u", "v", "response"])
        for d in dets:
            wr.writerow([f"{d.u:.6f}", f"{d.v:.6f}", f"{d.response:.6f}"])


def read_detections_csv(path) -> np.ndarray:
    """(N, 3) array of ``u, v, response``."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if rows[0] != ["u", "v", "response"]:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    return np.array(rows[1:], dtype=np.float64).reshape(-1, 3)


def write_cloud_csv(path, cloud: PointCloud) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# frame: {cloud.frame}\n")
        wr = csv.writer(f)
        wr.writerow(["x_mm", "y_mm", "z_mm"])
        for p in cloud.points:
            wr.writerow([f"{v:.6f}" for v in p])


def read_cloud_csv(path) -> PointCloud:
    with open(path, newline="") as f:
        first = f.readline()
        if not first.startswith("# frame:"):
            raise ValueError(f"{path}: missing frame comment")
        rows = list(csv.reader(f))
    return PointCloud(np.array(rows[1:], dtype=np.float64).reshape(-1, 3), first.split(":", 1)[1].strip())


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_calibration_json(path, p: CalibrationParams) -> None:
    write_json(path, p.to_dict())


def read_calibration_json(path) -> CalibrationParams:
    return CalibrationParams.from_dict(read_json(path))


def write_sweep_csv(path, samples: CalibrationSamples, measured=None) -> None:
    """Per-direction trace; ``measured`` overrides the raw angles (e.g. calibrated ones)."""
    m = samples.measured if measured is None else np.asarray(measured)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["theta_deg", "ax_meas", "ay_meas", "ax_cmd", "ay_cmd"])
        for t, (ax, ay), (cx, cy) in zip(samples.thetas, m, samples.commanded):
            wr.writerow([f"{v:.6f}" for v in (t, ax, ay, cx, cy)])


def read_sweep_csv(path) -> np.ndarray:
    """(N, 5) array in the column order of :func:`write_sweep_csv`."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return np.array(rows[1:], dtype=np.float64).reshape(-1, 5)


def write_grid_csv(path, grid: RmseGrid) -> None:
    """Diameter rows by alpha columns; absent cells are written as ``NA``."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["diameter_mm"] + [f"alpha_{a:g}" for a in grid.alphas])
        for d, row in zip(grid.diameters, grid.rmse):
            wr.writerow([f"{d:g}"] + ["NA" if math.isnan(v) else f"{v:.6f}" for v in row])


def read_grid_csv(path) -> tuple[list[float], list[float], np.ndarray]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    alphas = [float(h.removeprefix("alpha_")) for h in rows[0][1:]]
    diameters = [float(r[0]) for r in rows[1:]]
    rmse = np.array([[math.nan if v == "NA" else float(v) for v in r[1:]] for r in rows[1:]])
    return diameters, alphas, rmse


def write_sweep_svg(path, samples: CalibrationSamples, measured=None, title: str = "") -> None:
    """Line plot of measured vs commanded tilt angles over the sweep direction."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    m = samples.measured if measured is None else np.asarray(measured)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    t = samples.thetas
    ax.plot(t, m[:, 0], color="tab:red", label="X-tilt measured")
    ax.plot(t, m[:, 1], color="tab:green", label="Y-tilt measured")
    ax.plot(t, samples.commanded[:, 0], color="tab:red", alpha=0.35, lw=4, label="X-tilt commanded")
    ax.plot(t, samples.commanded[:, 1], color="tab:green", alpha=0.35, lw=4, label="Y-tilt commanded")
    ax.set_xlabel("tilt direction [deg]")
    ax.set_ylabel("tilt angle [deg]")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "softjig"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
