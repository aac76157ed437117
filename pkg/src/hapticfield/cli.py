"""Command-line pipeline: filter, curvature, pyramid, simulate, bench, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gridio
from .geometry import Heightfield
from .harness import (bench_step, metrics_to_json, run_session, trace_to_csv,
                      trajectory_from_csv, trajectory_from_spec)
from .audio import events_to_csv
from .models import load_model
from .proxy import FrictionGrid, Material
from .pyramid import build_pyramid
from .service import FRAMINGS, HapticServer
from .texture import (FilterParams, TextureBundle, bilateral_filter,
                      curvature_maps, extract_texture, friction_map)

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class InputError(Exception):
    """Bad user input: missing files, out-of-range values."""


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    with open(p, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config root must be a JSON object")
    for key in cfg.get("paths", {}).values():
        if not Path(key).exists():
            raise InputError(f"config references missing path: {key}")
    return cfg


def material_from_config(cfg: dict) -> Material:
    section = cfg.get("material", {})
    base = Material()
    try:
        return Material(
            stiffness_k=float(section.get("stiffness_k", base.stiffness_k)),
            rho=float(section.get("rho", base.rho)),
            mu_s=float(section.get("mu_s", base.mu_s)),
            mu_max=float(section.get("mu_max", base.mu_max)),
            workspace_radius=float(section.get("workspace_radius",
                                               base.workspace_radius)))
    except ValueError as exc:
        raise InputError(f"bad material config: {exc}")


def _require(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {p}")
    return p


def _filter_params(args, grid) -> FilterParams:
    if args.sigma_r is not None:
        return FilterParams(sigma_s=args.sigma_s, sigma_r=args.sigma_r,
                            window_radius=args.window_radius or 0)
    params = FilterParams.for_data(grid, sigma_s=args.sigma_s)
    if args.window_radius:
        params = FilterParams(sigma_s=params.sigma_s, sigma_r=params.sigma_r,
                              window_radius=args.window_radius)
    return params


def _export_grid(out_dir: Path, name: str, grid, meta: dict, want_csv: bool):
    gridio.save_grid_pgm16(out_dir / f"{name}.pgm", grid, meta)
    if want_csv:
        gridio.save_grid_csv(out_dir / f"{name}_values.csv", grid)


def cmd_filter(args) -> int:
    dm = gridio.load_depth_map(_require(args.input))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _filter_params(args, dm.samples)
    envelope = bilateral_filter(dm.samples, params)
    texture = extract_texture(dm.samples, envelope)
    meta = {"spacing": dm.spacing, "depth_scale": dm.depth_scale, "name": dm.name,
            "sigma_s": params.sigma_s, "sigma_r": params.sigma_r,
            "window_radius": params.window_radius}
    _export_grid(out_dir, "envelope", envelope, meta, args.csv)
    _export_grid(out_dir, "texture", texture, meta, args.csv)
    print(f"wrote envelope/texture for {dm.name} -> {out_dir}")
    return 0


def cmd_curvature(args) -> int:
    """Curvature and friction of a texture grid (typically cmd_filter output)."""
    dm = gridio.load_depth_map(_require(args.input))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.radius <= 0 or args.mu_max <= 0:
        raise InputError("radius and mu-max must be positive")
    try:
        mean, gauss = curvature_maps(dm.samples * dm.depth_scale, dm.spacing)
    except ValueError as exc:
        raise InputError(str(exc))
    friction = friction_map(mean, gauss, args.radius, args.mu_max)
    meta = {"spacing": dm.spacing, "depth_scale": dm.depth_scale, "name": dm.name,
            "workspace_radius": args.radius, "mu_max": args.mu_max}
    _export_grid(out_dir, "mean_curv", mean, meta, args.csv)
    _export_grid(out_dir, "gauss_curv", gauss, meta, args.csv)
    _export_grid(out_dir, "friction", friction, meta, args.csv)
    gridio.save_grid_pgm8(out_dir / "friction_preview.pgm", friction)
    print(f"wrote curvature/friction maps for {dm.name} -> {out_dir}")
    return 0


def cmd_pyramid(args) -> int:
    dm = gridio.load_depth_map(_require(args.input))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        pyr = build_pyramid(dm, args.levels, sigma_pre=args.sigma)
    except ValueError as exc:
        raise InputError(str(exc))
    for i, level in enumerate(pyr.levels):
        meta = {"spacing": level.spacing, "depth_scale": level.depth_scale,
                "name": f"{dm.name}_L{i}", "level": i}
        gridio.save_grid_pgm16(out_dir / f"level_{i}.pgm", level.samples, meta)
    print(f"wrote {pyr.num_levels} levels -> {out_dir}")
    return 0


def _load_trajectory(path: Path, hf: Heightfield):
    if path.suffix.lower() == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            return trajectory_from_spec(json.load(fh), hf)
    return trajectory_from_csv(path.read_text(encoding="utf-8"))


def cmd_simulate(args) -> int:
    model = load_model(_require(args.model_dir))
    hf = Heightfield(model.depth_map)
    traj = _load_trajectory(_require(args.trajectory), hf)
    friction = None
    if args.friction:
        bundle = TextureBundle.from_depth_map(
            model.depth_map, workspace_radius=model.material.workspace_radius,
            mu_max=model.material.mu_max)
        friction = FrictionGrid(bundle.friction, model.depth_map.spacing)
    material = model.material if args.friction else \
        Material(stiffness_k=model.material.stiffness_k, rho=model.material.rho,
                 mu_s=0.0, mu_max=model.material.mu_max,
                 workspace_radius=model.material.workspace_radius)
    trace = run_session(hf, material, friction, model.zone_map, traj,
                        max_inner=args.inner, eps=args.eps, g0=model.g0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(trace_to_csv(trace), encoding="utf-8")
    out.with_suffix(".metrics.json").write_text(metrics_to_json(trace.metrics),
                                                encoding="utf-8")
    out.with_suffix(".events.csv").write_text(events_to_csv(trace.events),
                                              encoding="utf-8")
    print(f"wrote {len(trace.frames)} frames -> {out}")
    return 0


def cmd_bench(args) -> int:
    if args.samples < 1000:
        raise InputError(f"--samples must be >= 1000, got {args.samples}")
    model = load_model(_require(args.model_dir))
    hf = Heightfield(model.depth_map)
    bundle = TextureBundle.from_depth_map(
        model.depth_map, workspace_radius=model.material.workspace_radius,
        mu_max=model.material.mu_max)
    friction = FrictionGrid(bundle.friction, model.depth_map.spacing)
    result = bench_step(hf, model.material, friction, samples=args.samples,
                        seed=args.seed)
    if args.json:
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"proxy step over {result.samples} samples:")
        print(f"  mean {result.mean_seconds * 1e6:9.3f} us")
        print(f"  p50  {result.p50_seconds * 1e6:9.3f} us")
        print(f"  p99  {result.p99_seconds * 1e6:9.3f} us")
    return 0


def cmd_serve(args) -> int:
    server = HapticServer(_require(args.model_dir), host=args.host,
                          port=args.port, framing=args.framing,
                          publish_rate=args.publish_rate)
    print(f"listening on {server.host}:{server.port}", flush=True)
    server.serve_forever()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapticfield",
        description="Haptic rendering pipeline for depth-map surfaces")
    parser.add_argument("--config", help="JSON config file with defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_filter_flags(p):
        p.add_argument("--sigma-s", type=float, default=3.0,
                       help="spatial spread in lattice units (default 3)")
        p.add_argument("--sigma-r", type=float, default=None,
                       help="range spread in depth units (default 0.1 x range)")
        p.add_argument("--window-radius", type=int, default=0,
                       help="window radius (default ceil(3 sigma_s))")
        p.add_argument("--csv", action="store_true", help="also export CSV grids")

    p = sub.add_parser("filter", help="bilateral envelope/texture split")
    p.add_argument("input")
    p.add_argument("out_dir")
    add_filter_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("curvature",
                       help="curvature and friction maps of a texture grid")
    p.add_argument("input")
    p.add_argument("out_dir")
    p.add_argument("--radius", type=float, default=0.5,
                   help="largest inscribable sphere radius (default 0.5)")
    p.add_argument("--mu-max", type=float, default=0.9, dest="mu_max")
    p.add_argument("--csv", action="store_true", help="also export CSV grids")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("pyramid", help="multi-resolution level stack")
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0,
                   help="pre-decimation smoothing spread (default 1.0)")
    p.add_argument("input")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_pyramid)

    p = sub.add_parser("simulate", help="replay a trajectory, write trace CSV")
    p.add_argument("model_dir")
    p.add_argument("--trajectory", required=True, help="CSV (t,x,y,z) or JSON spec")
    p.add_argument("--out", required=True, help="trace CSV path")
    friction = p.add_mutually_exclusive_group()
    friction.add_argument("--friction", dest="friction", action="store_true",
                          default=True)
    friction.add_argument("--no-friction", dest="friction", action="store_false")
    p.add_argument("--inner", type=int, default=100,
                   help="inner proxy iterations per tick (default 100)")
    p.add_argument("--eps", type=float, default=1e-7)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="proxy-step latency quantiles")
    p.add_argument("model_dir")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--model", dest="model_dir", required=True)
    p.add_argument("--port", type=int, default=7600)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--framing", choices=sorted(FRAMINGS), default="nl")
    p.add_argument("--publish-rate", type=int, default=60)
    p.set_defaults(func=cmd_serve)
    return parser


def apply_config_defaults(args: argparse.Namespace, cfg: dict) -> None:
    """Config supplies defaults; explicit flags always win (they were parsed)."""
    flt = cfg.get("filter", {})
    if getattr(args, "sigma_r", None) is None and "sigma_r" in flt:
        args.sigma_r = float(flt["sigma_r"])
    if getattr(args, "sigma_s", None) == 3.0 and "sigma_s" in flt:
        args.sigma_s = float(flt["sigma_s"])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        apply_config_defaults(args, cfg)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except KeyboardInterrupt:
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
