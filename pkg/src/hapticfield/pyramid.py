"""Multi-resolution level-of-detail: smooth-then-decimate octave pyramids
and run-time region-of-interest tiles mapped into the haptic workspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DepthMap, default_spacing

DEFAULT_SIGMA_PRE = 1.0
MIN_COARSE_SIZE = 8


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _smooth_axis(grid: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """Separable correlation with clamp-to-edge padding."""
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(grid, pad, mode="edge")
    out = np.zeros_like(grid)
    for i, w in enumerate(kernel):
        if axis == 0:
            out += w * padded[i:i + grid.shape[0], :]
        else:
            out += w * padded[:, i:i + grid.shape[1]]
    return out


def gaussian_smooth(grid: np.ndarray, sigma: float) -> np.ndarray:
    """Anti-alias blur before decimation: kernel truncated at 3 sigma."""
    kernel = _gaussian_kernel(sigma)
    return _smooth_axis(_smooth_axis(np.asarray(grid, dtype=np.float64), kernel, 0),
                        kernel, 1)


@dataclass(frozen=True)
class Pyramid:
    """Octave stack of depth maps, level 0 finest."""

    levels: tuple[DepthMap, ...]
    sigma_pre: float

    @property
    def num_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class RoiSelection:
    """A tile request: pyramid level, center in that level's lattice
    coordinates, tile size in lattice units, and a depth gain applied when
    the tile is mapped into the workspace."""

    level: int
    center: tuple[int, int]  # (col, row)
    extent: int
    depth_gain: float = 1.0

    def __post_init__(self):
        if self.extent < 2:
            raise ValueError(f"extent must be >= 2, got {self.extent}")
        if not (self.depth_gain > 0):
            raise ValueError(f"depth_gain must be positive, got {self.depth_gain}")


@dataclass(frozen=True)
class TileMapping:
    """How a tile relates to its source level (and the unit workspace)."""

    level: int
    origin: tuple[int, int]      # (col, row) of the tile in level lattice coords
    tile_width: int
    tile_height: int
    spacing: float               # workspace spacing of the extracted tile
    depth_scale: float
    source_spacing: float        # lattice spacing of the source level

    def to_level_coords(self, x: float, y: float) -> tuple[float, float]:
        """Map tile workspace (x, y) back to source-level lattice coords."""
        return (self.origin[0] + x / self.spacing,
                self.origin[1] + y / self.spacing)


def build_pyramid(dm: DepthMap, num_levels: int,
                  sigma_pre: float = DEFAULT_SIGMA_PRE) -> Pyramid:
    """Each level halves the previous one after a pre-smoothing blur.

    Decimation keeps every second sample starting at index 0; level l has
    ceil(N / 2^l) samples per axis. The coarsest level must stay >= 8x8.
    """
    if num_levels < 1:
        raise ValueError(f"num_levels must be >= 1, got {num_levels}")
    coarsest_w = math.ceil(dm.width / 2 ** (num_levels - 1))
    coarsest_h = math.ceil(dm.height / 2 ** (num_levels - 1))
    if coarsest_w < MIN_COARSE_SIZE or coarsest_h < MIN_COARSE_SIZE:
        raise ValueError(
            f"{num_levels} levels would shrink {dm.width}x{dm.height} below "
            f"{MIN_COARSE_SIZE}x{MIN_COARSE_SIZE}")
    levels = [dm]
    current = dm
    for _ in range(1, num_levels):
        smoothed = gaussian_smooth(current.samples, sigma_pre)
        decimated = smoothed[::2, ::2]
        current = DepthMap(samples=decimated, spacing=current.spacing * 2.0,
                           depth_scale=current.depth_scale, name=current.name)
        levels.append(current)
    return Pyramid(levels=tuple(levels), sigma_pre=sigma_pre)


def clamp_roi(level_map: DepthMap, sel: RoiSelection) -> tuple[int, int, int, int]:
    """Resolve a selection to (col0, row0, width, height), fully inside bounds."""
    tw = min(sel.extent, level_map.width)
    th = min(sel.extent, level_map.height)
    col0 = sel.center[0] - tw // 2
    row0 = sel.center[1] - th // 2
    col0 = max(0, min(col0, level_map.width - tw))
    row0 = max(0, min(row0, level_map.height - th))
    return col0, row0, tw, th


def select_roi(pyr: Pyramid, sel: RoiSelection,
               workspace_extent: float = 1.0) -> tuple[DepthMap, TileMapping]:
    """Extract a tile and rescale it to span the haptic workspace.

    The tile's spacing is chosen so its longer axis covers the workspace
    extent; depths are scaled by the selection's depth gain.
    """
    if not (0 <= sel.level < pyr.num_levels):
        raise ValueError(f"level out of range: {sel.level} (have {pyr.num_levels})")
    level_map = pyr.levels[sel.level]
    col0, row0, tw, th = clamp_roi(level_map, sel)
    samples = level_map.samples[row0:row0 + th, col0:col0 + tw]
    spacing = default_spacing(tw, th, workspace_extent)
    depth_scale = level_map.depth_scale * sel.depth_gain
    tile = DepthMap(samples=samples, spacing=spacing, depth_scale=depth_scale,
                    name=level_map.name)
    mapping = TileMapping(level=sel.level, origin=(col0, row0),
                          tile_width=tw, tile_height=th, spacing=spacing,
                          depth_scale=depth_scale, source_spacing=level_map.spacing)
    return tile, mapping


def full_roi(pyr: Pyramid, level: int, depth_gain: float = 1.0) -> RoiSelection:
    """Selection covering an entire level."""
    lm = pyr.levels[level]
    return RoiSelection(level=level, center=(lm.width // 2, lm.height // 2),
                        extent=max(lm.width, lm.height), depth_gain=depth_gain)
