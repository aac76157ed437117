"""Model directories and synthetic demo assets.

A model directory holds a depth map (`depth.pgm` or `depth.csv` plus
sidecar), optional zone labels (`zones.pgm`, raw 8-bit values are the zone
ids, with an optional `zones.json` mapping ids to WAV clips) and an optional
`material.json` with contact parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, ZoneMap, load_zone_clips, sargam_clips
from .geometry import DepthMap, default_spacing
from .gridio import load_depth_map, read_pgm, save_depth_map, write_pgm
from .proxy import Material


@dataclass(frozen=True)
class Model:
    name: str
    depth_map: DepthMap
    zone_map: ZoneMap | None
    clips: dict[int, AudioClip]
    material: Material
    g0: float = 1.0


def _find_depth_file(directory: Path) -> Path:
    for candidate in ("depth.pgm", "depth.csv"):
        p = directory / candidate
        if p.exists():
            return p
    raise FileNotFoundError(f"no depth.pgm or depth.csv in {directory}")


def load_material(path: Path) -> tuple[Material, float]:
    defaults = Material()
    if not path.exists():
        return defaults, 1.0
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    material = Material(
        stiffness_k=float(cfg.get("stiffness_k", defaults.stiffness_k)),
        rho=float(cfg.get("rho", defaults.rho)),
        mu_s=float(cfg.get("mu_s", defaults.mu_s)),
        mu_max=float(cfg.get("mu_max", defaults.mu_max)),
        workspace_radius=float(cfg.get("workspace_radius", defaults.workspace_radius)))
    return material, float(cfg.get("g0", 1.0))


def load_model(directory: str | Path) -> Model:
    directory = Path(directory)
    depth_path = _find_depth_file(directory)
    dm = load_depth_map(depth_path)
    zone_map = None
    clips: dict[int, AudioClip] = {}
    zones_path = directory / "zones.pgm"
    if zones_path.exists():
        labels, _ = read_pgm(zones_path)
        if labels.shape != dm.samples.shape:
            raise ValueError(f"zone map {labels.shape} does not match depth "
                             f"map {dm.samples.shape} in {directory}")
        zone_map = ZoneMap(labels=labels.astype(np.int32), spacing=dm.spacing)
        clip_json = directory / "zones.json"
        if clip_json.exists():
            clips = load_zone_clips(clip_json)
        else:
            clips = sargam_clips(max(zone_map.zone_ids, default=0))
    material, g0 = load_material(directory / "material.json")
    return Model(name=dm.name or directory.name, depth_map=dm, zone_map=zone_map,
                 clips=clips, material=material, g0=g0)


def list_models(directory: str | Path) -> dict[str, Path]:
    """A directory is either one model or a folder of model subdirectories."""
    directory = Path(directory)
    if (directory / "depth.pgm").exists() or (directory / "depth.csv").exists():
        return {directory.name: directory}
    out = {}
    for sub in sorted(directory.iterdir()):
        if sub.is_dir() and ((sub / "depth.pgm").exists() or (sub / "depth.csv").exists()):
            out[sub.name] = sub
    if not out:
        raise FileNotFoundError(f"no models under {directory}")
    return out


def save_model(directory: str | Path, dm: DepthMap,
               zone_labels: np.ndarray | None = None,
               material: Material | None = None, g0: float | None = None,
               depth_format: str = "csv") -> Path:
    """Write a model directory. CSV depth keeps values exact; PGM quantizes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_depth_map(directory / f"depth.{depth_format}", dm)
    if zone_labels is not None:
        write_pgm(directory / "zones.pgm", np.asarray(zone_labels), 255)
    if material is not None or g0 is not None:
        material = material or Material()
        cfg = {"stiffness_k": material.stiffness_k, "rho": material.rho,
               "mu_s": material.mu_s, "mu_max": material.mu_max,
               "workspace_radius": material.workspace_radius}
        if g0 is not None:
            cfg["g0"] = g0
        with open(directory / "material.json", "w", encoding="utf-8") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return directory


# ---------------------------------------------------------------------------
# Synthetic demo surfaces


def make_flat_map(n: int = 65, level: float = 0.5, depth_scale: float = 1.0) -> DepthMap:
    return DepthMap(samples=np.full((n, n), float(level)),
                    spacing=default_spacing(n, n), depth_scale=depth_scale,
                    name="flat")


def make_ramp_map(n: int = 65, slope: float = 1.0, depth_scale: float = 1.0) -> DepthMap:
    """f(x, y) = slope * x in workspace units."""
    spacing = default_spacing(n, n)
    x = np.arange(n) * spacing * slope / depth_scale
    return DepthMap(samples=np.tile(x, (n, 1)), spacing=spacing,
                    depth_scale=depth_scale, name="ramp")


def make_sinusoid_map(n: int = 257, base: float = 0.5, amplitude: float = 0.02,
                      cycles: float = 3.0, depth_scale: float = 1.0) -> DepthMap:
    """base + A sin(2 pi cycles x), extruded along y."""
    spacing = default_spacing(n, n)
    x = np.arange(n) * spacing
    row = base + amplitude * np.sin(2.0 * math.pi * cycles * x)
    return DepthMap(samples=np.tile(row, (n, 1)), spacing=spacing,
                    depth_scale=depth_scale, name="sinusoid")


def make_textured_scan(n: int = 256, seed: int = 7, base: float = 0.6,
                       bump_amplitude: float = 0.08,
                       texture_amplitude: float = 0.004,
                       texture_cycles: float = 24.0,
                       depth_scale: float = 1.0) -> DepthMap:
    """A natural-looking scan: smooth random envelope plus fine weave texture."""
    rng = np.random.default_rng(seed)
    spacing = default_spacing(n, n)
    xs = np.arange(n) * spacing
    x, y = np.meshgrid(xs, xs)
    envelope = np.full((n, n), base)
    for _ in range(6):
        cx, cy = rng.uniform(0.1, 0.9, 2)
        sig = rng.uniform(0.1, 0.25)
        amp = rng.uniform(-bump_amplitude, bump_amplitude)
        envelope += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sig * sig))
    w = 2.0 * math.pi * texture_cycles
    texture = texture_amplitude * (np.sin(w * x) * np.sin(w * y)
                                   + 0.5 * np.sin(1.7 * w * x + 0.9)
                                   + 0.5 * np.sin(2.3 * w * y + 0.4))
    return DepthMap(samples=envelope + texture, spacing=spacing,
                    depth_scale=depth_scale, name="textured-scan")


def make_pillar_zones(n: int, num_zones: int = 7, margin_frac: float = 0.08,
                      gap_frac: float = 0.02) -> np.ndarray:
    """Vertical pillar strips labeled 1..num_zones, 0 between and around."""
    labels = np.zeros((n, n), dtype=np.int32)
    margin = int(n * margin_frac)
    gap = max(1, int(n * gap_frac))
    usable = n - 2 * margin
    strip = (usable - (num_zones - 1) * gap) // num_zones
    col = margin
    for z in range(1, num_zones + 1):
        labels[margin:n - margin, col:col + strip] = z
        col += strip + gap
    return labels


def make_two_zone_labels(n: int) -> np.ndarray:
    """Two half-plane pillars split at the vertical midline, 0 in a gap."""
    labels = np.zeros((n, n), dtype=np.int32)
    gap = max(1, n // 32)
    mid = n // 2
    labels[:, : mid - gap] = 1
    labels[:, mid + gap:] = 2
    return labels


def write_demo_model(directory: str | Path, kind: str = "pillars",
                     n: int = 129) -> Path:
    """Materialize a ready-to-serve demo model directory."""
    if kind == "pillars":
        dm = make_textured_scan(n=n)
        labels = make_pillar_zones(n)
    elif kind == "two-zone":
        dm = make_flat_map(n=n, level=0.5)
        labels = make_two_zone_labels(n)
    elif kind == "sinusoid":
        dm = make_sinusoid_map(n=n)
        labels = None
    else:
        raise ValueError(f"unknown demo kind: {kind!r}")
    return save_model(Path(directory), dm, zone_labels=labels,
                      material=Material(), g0=1.0)
