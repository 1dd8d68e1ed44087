import json

import numpy as np
import pytest

from softjig import io
from softjig.cli import main
from softjig.config import RunConfig, config_from_dict, load_config, save_config
from softjig.errors import ConfigError


class TestConfig:
    def test_empty_gives_defaults(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{}")
        assert load_config(p) == RunConfig()

    def test_negative_baseline_names_field(self):
        with pytest.raises(ConfigError, match="baseline"):
            config_from_dict({"rig": {"baseline": -1}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key rig.focal"):
            config_from_dict({"rig": {"focal": 500}})

    def test_bad_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_round_trip(self, tmp_path):
        cfg = config_from_dict({"seed": 4, "grid": {"diameters": [40, 50]}, "render": {"noise_sigma": 1.0}})
        save_config(cfg, tmp_path / "c.json")
        assert load_config(tmp_path / "c.json") == cfg

    def test_push_must_stay_below_membrane(self):
        with pytest.raises(ConfigError):
            config_from_dict({"contact": {"push_depth": 31}})

    def test_explicit_disparity_window(self):
        cfg = config_from_dict({"matching": {"min_disparity": 100, "max_disparity": 120}})
        p = cfg.match_params()
        assert (p.min_disparity, p.max_disparity) == (100, 120)


def simulate(out, *extra):
    return main(["simulate", "--out", str(out), "--alpha", "10", "--theta", "90", *extra])


class TestCli:
    def test_simulate_deterministic(self, tmp_path):
        assert simulate(tmp_path / "a") == 0
        assert simulate(tmp_path / "b") == 0
        for name in ("left.pgm", "right.pgm", "truth.json", "fiducials.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        truth = io.read_json(tmp_path / "a" / "truth.json")
        assert truth["alpha_deg"] == 10 and truth["theta_deg"] == 90

    def test_simulate_then_estimate(self, tmp_path):
        simulate(tmp_path)
        rc = main(["estimate", str(tmp_path / "left.pgm"), str(tmp_path / "right.pgm"), "--diameter", "60", "--out", str(tmp_path / "e")])
        assert rc == 0
        est = io.read_json(tmp_path / "e" / "estimate.json")
        assert est["ax_deg"] == pytest.approx(10, abs=1) and abs(est["ay_deg"]) < 1
        assert est["push_depth_mm"] == pytest.approx(10, abs=0.5)
        assert io.read_cloud_csv(tmp_path / "e" / "cloud_jig.csv").frame == "jig"

    def test_estimate_with_pnp(self, tmp_path):
        simulate(tmp_path)
        rc = main([
            "estimate", str(tmp_path / "left.pgm"), str(tmp_path / "right.pgm"),
            "--diameter", "60", "--fiducials", str(tmp_path / "fiducials.csv"), "--out", str(tmp_path / "e"),
        ])
        assert rc == 0
        assert io.read_json(tmp_path / "e" / "estimate.json")["ax_deg"] == pytest.approx(10, abs=1)

    def test_estimate_black_images(self, tmp_path, capsys):
        io.write_pgm(tmp_path / "l.pgm", np.zeros((480, 640)))
        io.write_pgm(tmp_path / "r.pgm", np.zeros((480, 640)))
        rc = main(["estimate", str(tmp_path / "l.pgm"), str(tmp_path / "r.pgm"), "--out", str(tmp_path / "e")])
        assert rc == 3
        assert "insufficient data" in capsys.readouterr().err
        assert not (tmp_path / "e" / "cloud_jig.csv").exists()
        assert not (tmp_path / "e" / "manifest.json").exists()

    def test_detect(self, tmp_path):
        simulate(tmp_path)
        assert main(["detect", str(tmp_path / "left.pgm"), "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "left_detections.csv").read_text().splitlines()
        assert lines[0] == "u,v,response" and len(lines) > 300

    def test_config_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"rig": {"baseline": -5}}))
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2
        assert "baseline" in capsys.readouterr().err

    def test_bad_override_is_config_error(self, tmp_path):
        assert simulate(tmp_path, "--alpha", "50") == 2

    def test_missing_input_is_data_error(self, tmp_path):
        assert main(["detect", str(tmp_path / "nope.pgm"), "--out", str(tmp_path)]) == 3

    def test_small_evaluate(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "calibration": {"n": 8},
            "grid": {"diameters": [40, 60], "alphas": [10], "n": 8},
        }))
        assert main(["evaluate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        manifest = io.read_json(tmp_path / "o" / "manifest.json")
        assert manifest["command"] == "evaluate"
        paths = [p for ps in manifest["outputs"].values() for p in ps]
        assert len(paths) == 7
        for p in paths:
            assert (tmp_path / "o").joinpath(p.split("/")[-1]).exists()
        d, a, r = io.read_grid_csv(tmp_path / "o" / "rmse_grid.csv")
        assert d == [40, 60] and a == [10] and np.all(r < 2)
        assert io.read_calibration_json(tmp_path / "o" / "calibration.json").scale > 0
        assert set(manifest["timings_s"]) >= {"calibrate", "evaluate"}
