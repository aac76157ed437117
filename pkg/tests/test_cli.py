import json
import math
from pathlib import Path

import numpy as np
import pytest

from hapticfield import gridio
from hapticfield.cli import main
from hapticfield.geometry import DepthMap
from hapticfield.harness import trajectory_to_csv
from hapticfield.models import make_flat_map, make_sinusoid_map, save_model, \
    write_demo_model
from hapticfield.proxy import Material
from hapticfield.texture import FilterParams, bilateral_filter_brute


@pytest.mark.parametrize("cmd", ["filter", "curvature", "pyramid", "simulate",
                                 "bench", "serve"])
def test_help_exits_zero(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0


def test_missing_input_is_usage_error(tmp_path):
    status = main(["filter", str(tmp_path / "nope.pgm"), str(tmp_path / "out")])
    assert status == 2


def test_filter_constant_passthrough(tmp_path):
    dm = make_flat_map(n=16, level=0.5)
    gridio.save_depth_map(tmp_path / "depth.pgm", dm)
    out = tmp_path / "out"
    assert main(["filter", str(tmp_path / "depth.pgm"), str(out),
                 "--sigma-r", "0.1"]) == 0
    envelope, meta = gridio.load_grid(out / "envelope.pgm")
    assert np.allclose(envelope, 0.5, atol=1e-9)
    texture, _ = gridio.load_grid(out / "texture.pgm")
    assert np.allclose(texture, 0.0, atol=1e-9)
    assert "min" in meta and "max" in meta


def test_filter_matches_brute_oracle(tmp_path):
    rng = np.random.default_rng(60)
    samples = rng.uniform(0.0, 1.0, (16, 16))
    dm = DepthMap(samples=samples, spacing=1.0 / 15, depth_scale=1.0, name="g")
    gridio.save_depth_map(tmp_path / "depth.csv", dm)
    out = tmp_path / "out"
    assert main(["filter", str(tmp_path / "depth.csv"), str(out),
                 "--sigma-s", "1.5", "--sigma-r", "0.15", "--csv"]) == 0
    envelope = gridio.read_grid_csv(out / "envelope_values.csv")
    oracle = bilateral_filter_brute(samples, FilterParams(sigma_s=1.5, sigma_r=0.15))
    assert np.max(np.abs(envelope - oracle)) < 1e-9
    texture = gridio.read_grid_csv(out / "texture_values.csv")
    assert np.max(np.abs((samples - oracle) - texture)) < 1e-12


def test_curvature_plane_clamps_friction(tmp_path):
    dm = make_flat_map(n=16, level=0.3)
    gridio.save_depth_map(tmp_path / "texture.csv", dm)
    out = tmp_path / "out"
    assert main(["curvature", str(tmp_path / "texture.csv"), str(out),
                 "--mu-max", "0.8", "--csv"]) == 0
    mu = gridio.read_grid_csv(out / "friction_values.csv")
    assert np.all(mu == 0.8)
    assert (out / "friction_preview.pgm").exists()
    for name in ("mean_curv", "gauss_curv", "friction"):
        meta = gridio.read_sidecar(out / f"{name}.pgm")
        assert "min" in meta and "max" in meta


def test_curvature_sphere_apex(tmp_path):
    n, r = 65, 10.0
    xs = np.linspace(-1.0, 1.0, n)
    x, y = np.meshgrid(xs, xs)
    cap = np.sqrt(r * r - x * x - y * y)
    dm = DepthMap(samples=cap, spacing=float(xs[1] - xs[0]), depth_scale=1.0,
                  name="cap")
    gridio.save_depth_map(tmp_path / "texture.csv", dm)
    out = tmp_path / "out"
    assert main(["curvature", str(tmp_path / "texture.csv"), str(out),
                 "--radius", "100.0", "--csv"]) == 0
    H = gridio.read_grid_csv(out / "mean_curv_values.csv")
    K = gridio.read_grid_csv(out / "gauss_curv_values.csv")
    c = n // 2
    assert abs(abs(H[c, c]) - 1.0 / r) < 0.02 * (1.0 / r)
    assert abs(K[c, c] - 1.0 / r ** 2) < 0.02 * (1.0 / r ** 2)
    # mu_d at the apex follows the analytic resultant curvature
    mu = gridio.read_grid_csv(out / "friction_values.csv")
    expected = 1.0 / (100.0 * math.hypot(1.0 / r, 1.0 / r ** 2))
    assert abs(mu[c, c] - expected) < 0.02 * expected


def test_pyramid_cli_levels(tmp_path):
    dm = make_flat_map(n=64, level=0.4)
    gridio.save_depth_map(tmp_path / "depth.pgm", dm)
    out = tmp_path / "pyr"
    assert main(["pyramid", "--levels", "3", "--sigma", "1.0",
                 str(tmp_path / "depth.pgm"), str(out)]) == 0
    sizes = []
    for i in range(3):
        grid, meta = gridio.load_grid(out / f"level_{i}.pgm")
        sizes.append(grid.shape[0])
        assert meta["level"] == i
    assert sizes == [64, 32, 16]
    # too many levels for the input is an input error
    assert main(["pyramid", "--levels", "6", str(tmp_path / "depth.pgm"),
                 str(out)]) == 2


def test_simulate_free_space_zero_force(tmp_path):
    model_dir = write_demo_model(tmp_path / "model", kind="two-zone", n=33)
    traj = tmp_path / "traj.csv"
    traj.write_text("t,x,y,z\n0.0,0.2,0.2,0.9\n0.1,0.8,0.8,0.9\n")
    out = tmp_path / "trace.csv"
    assert main(["simulate", str(model_dir), "--trajectory", str(traj),
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("t,hip_x")
    for line in lines[1:]:
        parts = line.split(",")
        assert parts[7] == "0.0" and parts[8] == "0.0" and parts[9] == "0.0"
    metrics = json.loads(out.with_suffix(".metrics.json").read_text())
    assert metrics["convergence_tick"] is None
    assert out.with_suffix(".events.csv").read_text().startswith("t,zone,gain")


def test_simulate_deterministic_bytes(tmp_path):
    model_dir = write_demo_model(tmp_path / "model", kind="pillars", n=65)
    traj = tmp_path / "traj.json"
    traj.write_text(json.dumps({"kind": "drag", "start": [0.2, 0.5, 0.9],
                                "depth_z": 0.55, "end_xy": [0.8, 0.5],
                                "t_drag": 0.2, "t_hold": 0.1}))
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        assert main(["simulate", str(model_dir), "--trajectory", str(traj),
                     "--out", str(out)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    assert out_a.with_suffix(".events.csv").read_bytes() == \
        out_b.with_suffix(".events.csv").read_bytes()


def test_simulate_friction_lag_via_cli(tmp_path, fig8):
    model_dir = tmp_path / "model"
    save_model(model_dir, fig8.depth_map,
               material=Material(rho=0.1, mu_s=0.0), g0=1.0)
    traj = tmp_path / "traj.csv"
    traj.write_text(trajectory_to_csv(fig8.trajectory))
    args = ["--trajectory", str(traj), "--inner", str(fig8.MAX_INNER),
            "--eps", repr(fig8.EPS)]
    out_f = tmp_path / "fric.csv"
    out_p = tmp_path / "plain.csv"
    assert main(["simulate", str(model_dir), "--out", str(out_f),
                 "--friction", *args]) == 0
    assert main(["simulate", str(model_dir), "--out", str(out_p),
                 "--no-friction", *args]) == 0
    fric = json.loads(out_f.with_suffix(".metrics.json").read_text())
    plain = json.loads(out_p.with_suffix(".metrics.json").read_text())
    assert fric["convergence_tick"] > plain["convergence_tick"]


def test_bench_sample_floor_and_json(tmp_path, capsys):
    model_dir = write_demo_model(tmp_path / "model", kind="two-zone", n=33)
    assert main(["bench", str(model_dir), "--samples", "100"]) == 2
    capsys.readouterr()
    assert main(["bench", str(model_dir), "--samples", "1000", "--json"]) == 0
    parsed = json.loads(capsys.readouterr().out)
    assert parsed["samples"] == 1000
    assert parsed["mean_seconds"] > 0


def test_config_with_missing_path_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"paths": {"model": str(tmp_path / "ghost")}}))
    model_dir = write_demo_model(tmp_path / "model", kind="two-zone", n=33)
    assert main(["--config", str(cfg), "bench", str(model_dir)]) == 2


def test_config_supplies_filter_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"filter": {"sigma_r": 0.2, "sigma_s": 1.0}}))
    dm = make_flat_map(n=16, level=0.5)
    gridio.save_depth_map(tmp_path / "depth.csv", dm)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "filter", str(tmp_path / "depth.csv"),
                 str(out)]) == 0
    meta = gridio.read_sidecar(out / "envelope.pgm")
    assert meta["sigma_r"] == 0.2
    assert meta["sigma_s"] == 1.0
