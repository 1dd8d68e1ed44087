"""Command-line entry point: ``softjig {simulate,detect,estimate,calibrate,evaluate}``.

Exit codes: 0 success, 2 configuration error, 3 data or estimation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .calibration import (
    CALIBRATION_STAGE,
    apply_calibration,
    compute_calibration,
    evaluate_rmse_grid,
    run_sweep,
)
from .config import RunConfig, load_config
from .detect import detect_markers
from .errors import ConfigError, SoftJigError
from .geometry import tilt_angles_from_normal
from .plane import CropSpec, crop_point_cloud, fit_plane_svd
from .sim import generate_scene
from .stereo import camera_to_jig_from_pnp, match_detections, transform_cloud, triangulate_pairs

log = logging.getLogger("softjig")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class Run:
    """Tracks outputs and timings of one invocation and writes the manifest."""

    def __init__(self, cfg: RunConfig, out: Path, command: str):
        self.cfg = cfg
        self.out = out
        self.command = command
        self.outputs: dict[str, list[str]] = {}
        self.timings: dict[str, float] = {}
        self.written: list[Path] = []

    def path(self, stage: str, name: str) -> Path:
        p = self.out / name
        self.outputs.setdefault(stage, []).append(str(p))
        self.written.append(p)
        return p

    @contextmanager
    def timed(self, stage: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[stage] = self.timings.get(stage, 0.0) + time.perf_counter() - t0

    def cleanup(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)

    def write_manifest(self) -> Path:
        p = self.out / "manifest.json"
        io.write_json(
            p,
            {
                "command": self.command,
                "version": __version__,
                "config": self.cfg.to_dict(),
                "outputs": self.outputs,
                "timings_s": self.timings,
            },
        )
        return p


def cmd_simulate(run: Run, args) -> None:
    cfg = run.cfg
    contact = cfg.contact
    overrides = {k: v for k, v in (
        ("object_diameter", args.diameter),
        ("tilt_alpha", args.alpha),
        ("tilt_direction", args.theta),
        ("push_depth", args.push),
    ) if v is not None}
    if overrides:
        try:
            contact = replace(contact, **overrides)
        except ValueError as e:
            raise ConfigError(f"contact override: {e}") from e
    with run.timed("simulate"):
        scene = generate_scene(
            cfg.jig, cfg.rig, contact, cfg.render.blur_sigma, cfg.render.noise_sigma, cfg.seed
        )
    io.write_pgm(run.path("simulate", "left.pgm"), scene.image_left)
    io.write_pgm(run.path("simulate", "right.pgm"), scene.image_right)
    io.write_json(run.path("simulate", "truth.json"), scene.truth_dict())
    with open(run.path("simulate", "fiducials.csv"), "w") as f:
        f.write("u,v\n")
        for u, v in scene.fiducial_pixels_left:
            f.write(f"{u:.6f},{v:.6f}\n")


def cmd_detect(run: Run, args) -> None:
    for img_path in args.images:
        img = io.read_pgm(img_path)
        with run.timed("detect"):
            dets = detect_markers(img, run.cfg.detection)
        io.write_detections_csv(run.path("detect", f"{Path(img_path).stem}_detections.csv"), dets)
        log.info("%s: %d detections", img_path, len(dets))


def _read_fiducials(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1).reshape(-1, 2)


def cmd_estimate(run: Run, args) -> None:
    cfg = run.cfg
    left, right = io.read_pgm(args.left), io.read_pgm(args.right)
    crop = cfg.crop if args.diameter is None else CropSpec.for_diameter(args.diameter, cfg.crop.margin_factor)
    with run.timed("estimate"):
        dl = detect_markers(left, cfg.detection)
        dr = detect_markers(right, cfg.detection)
        cloud = triangulate_pairs(match_detections(dl, dr, cfg.match_params()), cfg.rig)
        if args.fiducials or cfg.registration == "pnp":
            if not args.fiducials:
                raise ConfigError("registration 'pnp' needs --fiducials")
            to_jig = camera_to_jig_from_pnp(cfg.rig, _read_fiducials(args.fiducials), cfg.jig)
        else:
            to_jig = cfg.rig.pose_mid
        jig_cloud = transform_cloud(cloud, to_jig, source="camera", target="jig")
        io.write_cloud_csv(run.path("estimate", "cloud_jig.csv"), jig_cloud)
        fit = fit_plane_svd(crop_point_cloud(jig_cloud, crop))
    result = fit.to_dict()
    result["push_depth_mm"] = fit.push_depth(cfg.jig.membrane_rest_height)
    io.write_json(run.path("estimate", "estimate.json"), result)
    t = tilt_angles_from_normal(fit.normal)
    log.info("normal=%s ax=%.3f ay=%.3f points=%d", np.round(fit.normal, 5).tolist(), t.ax, t.ay, fit.point_count)


def _calibrate(run: Run, threads: int):
    cfg = run.cfg
    with run.timed("calibrate"):
        samples = run_sweep(cfg.calibration, cfg.setup(), cfg.seed, CALIBRATION_STAGE, threads)
        params = compute_calibration(samples)
    io.write_calibration_json(run.path("calibrate", "calibration.json"), params)
    io.write_sweep_csv(run.path("calibrate", "sweep_raw.csv"), samples)
    log.info("calibration: %s (failed samples: %d)", params, samples.failed)
    return samples, params


def cmd_calibrate(run: Run, args) -> None:
    _calibrate(run, args.threads)


def cmd_evaluate(run: Run, args) -> None:
    cfg = run.cfg
    samples, params = _calibrate(run, args.threads)
    corrected = apply_calibration(samples.measured, params)
    io.write_sweep_csv(run.path("evaluate", "sweep_calibrated.csv"), samples, corrected)
    io.write_sweep_svg(run.path("evaluate", "sweep_raw.svg"), samples, title="Tilt angles before calibration")
    io.write_sweep_svg(
        run.path("evaluate", "sweep_calibrated.svg"), samples, corrected, title="Tilt angles after calibration"
    )
    g = cfg.grid
    with run.timed("evaluate"):
        grid = evaluate_rmse_grid(g.diameters, g.alphas, params, cfg.setup(), g.n, g.push_depth, cfg.seed, args.threads)
    io.write_grid_csv(run.path("evaluate", "rmse_grid.csv"), grid)
    failed = [[int(v) for v in row] for row in grid.failed]
    io.write_json(run.path("evaluate", "rmse_failed_counts.json"), {"diameters": grid.diameters, "alphas": grid.alphas, "failed": failed})


COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "estimate": cmd_estimate,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--verbose", "-v", action="count", default=0)

    p = argparse.ArgumentParser(prog="softjig", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="render a stereo pair with ground truth")
    s.add_argument("--diameter", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--theta", type=float)
    s.add_argument("--push", type=float)

    s = sub.add_parser("detect", parents=[common], help="detect markers in PGM images")
    s.add_argument("images", nargs="+", type=Path)

    s = sub.add_parser("estimate", parents=[common], help="estimate the principal normal from a pair")
    s.add_argument("left", type=Path)
    s.add_argument("right", type=Path)
    s.add_argument("--diameter", type=float, help="object diameter; crop radius is half of it")
    s.add_argument("--fiducials", type=Path, help="CSV of left-image fiducial pixels for PnP registration")

    sub.add_parser("calibrate", parents=[common], help="run the reference sweep and fit offsets/scale")
    sub.add_parser("evaluate", parents=[common], help="calibrate, then compute the RMSE grid")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("softjig: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, output_dir=str(args.out))
    except (ConfigError, ValueError) as e:
        print(f"softjig: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out, args.command)
    try:
        COMMANDS[args.command](run, args)
    except ConfigError as e:
        run.cleanup()
        print(f"softjig {args.command}: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SoftJigError, ValueError, OSError) as e:
        run.cleanup()
        print(f"softjig {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    run.write_manifest()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
