"""Grid file I/O: binary PGM (P5), CSV grids, and JSON sidecar metadata.

Depth maps travel as 16-bit PGM (maxval 65535, big-endian sample order) or
as CSV rows of decimal depths, with an optional sidecar JSON next to the
file carrying {spacing, depth_scale, name} and, for quantized exports, the
{min, max} of the original values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import DepthMap, default_spacing

DEFAULT_DEPTH_SCALE = 0.25  # fraction of the unit workspace extent


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def read_sidecar(path: str | Path) -> dict:
    sc = sidecar_path(path)
    if not sc.exists():
        return {}
    with open(sc, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_sidecar(path: str | Path, meta: dict) -> Path:
    sc = sidecar_path(path)
    with open(sc, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sc


def _read_pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Parse a P5 header, returning (width, height, maxval, data offset)."""
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError("truncated PGM header")
        c = data[pos:pos + 1]
        if c == b"#":
            pos = data.index(b"\n", pos) + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
    # Exactly one whitespace byte separates maxval from the raster.
    return fields[0], fields[1], fields[2], pos + 1


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a binary PGM; returns (raw integer samples as float64, maxval)."""
    data = Path(path).read_bytes()
    width, height, maxval, offset = _read_pgm_header(data)
    count = width * height
    if maxval > 255:
        raw = np.frombuffer(data, dtype=">u2", count=count, offset=offset)
    else:
        raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)
    if raw.size != count:
        raise ValueError("truncated PGM raster")
    return raw.reshape(height, width).astype(np.float64), maxval


def write_pgm(path: str | Path, raw: np.ndarray, maxval: int) -> None:
    raw = np.asarray(raw)
    height, width = raw.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    if maxval > 255:
        body = raw.astype(">u2").tobytes()
    else:
        body = raw.astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def save_grid_pgm16(path: str | Path, grid: np.ndarray, meta: dict | None = None) -> None:
    """Save a float grid as 16-bit PGM, linearly mapped; min/max go to the sidecar."""
    grid = np.asarray(grid, dtype=np.float64)
    lo = float(grid.min())
    hi = float(grid.max())
    if hi > lo:
        q = np.rint((grid - lo) * (65535.0 / (hi - lo)))
    else:
        q = np.zeros_like(grid)
    write_pgm(path, q.astype(np.uint16), 65535)
    sidecar = {"min": lo, "max": hi}
    if meta:
        sidecar.update(meta)
    write_sidecar(path, sidecar)


def save_grid_pgm8(path: str | Path, grid: np.ndarray) -> None:
    """8-bit preview; lossy, no sidecar."""
    grid = np.asarray(grid, dtype=np.float64)
    lo = float(grid.min())
    hi = float(grid.max())
    if hi > lo:
        q = np.rint((grid - lo) * (255.0 / (hi - lo)))
    else:
        q = np.zeros_like(grid)
    write_pgm(path, q.astype(np.uint8), 255)


def save_grid_csv(path: str | Path, grid: np.ndarray, meta: dict | None = None) -> None:
    grid = np.asarray(grid, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in grid:
            fh.write(",".join(repr(v) for v in row.tolist()))
            fh.write("\n")
    if meta is not None:
        write_sidecar(path, meta)


def read_grid_csv(path: str | Path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"empty CSV grid: {path}")
    return np.asarray(rows, dtype=np.float64)


def load_grid(path: str | Path) -> tuple[np.ndarray, dict]:
    """Load a grid from PGM or CSV plus its sidecar metadata.

    PGM samples are dequantized to [min, max] when the sidecar records them,
    otherwise normalized to [0, 1]. CSV values are taken as-is.
    """
    path = Path(path)
    meta = read_sidecar(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        raw, maxval = read_pgm(path)
        if "min" in meta and "max" in meta:
            lo, hi = float(meta["min"]), float(meta["max"])
            grid = lo + raw * ((hi - lo) / maxval) if hi > lo else np.full_like(raw, lo)
        else:
            grid = raw / maxval
    elif suffix == ".csv":
        grid = read_grid_csv(path)
    else:
        raise ValueError(f"unsupported grid format: {path.suffix}")
    return grid, meta


def load_depth_map(path: str | Path) -> DepthMap:
    """Load a depth map, applying sidecar or default workspace scaling.

    Defaults when the sidecar is missing: spacing = 1/(N-1) of the unit
    workspace extent (N the longer axis), depth_scale = 0.25 of the extent.
    """
    grid, meta = load_grid(path)
    height, width = grid.shape
    spacing = float(meta.get("spacing", default_spacing(width, height)))
    depth_scale = float(meta.get("depth_scale", DEFAULT_DEPTH_SCALE))
    name = str(meta.get("name", Path(path).stem))
    return DepthMap(samples=grid, spacing=spacing, depth_scale=depth_scale, name=name)


def save_depth_map(path: str | Path, dm: DepthMap) -> None:
    """Save a depth map with full-fidelity sidecar (PGM or CSV by extension)."""
    meta = {"spacing": dm.spacing, "depth_scale": dm.depth_scale, "name": dm.name}
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        save_grid_pgm16(path, dm.samples, meta)
    elif suffix == ".csv":
        save_grid_csv(path, dm.samples, meta)
    else:
        raise ValueError(f"unsupported depth map format: {suffix}")
