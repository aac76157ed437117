"""Continuous heightfield geometry over a regular depth-map lattice.

The depth map stores z = f(x, y) row-major; the heightfield extends it to a
continuous surface by bilinear interpolation with clamp-to-edge boundaries.
Free space is z > f(x, y): larger z means farther from the object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = tuple[float, float, float]

# Convergence budget for the directional surface projection.
_PROJECT_MAX_ITERS = 16
_PROJECT_TOL_FACTOR = 1e-7


@dataclass(frozen=True)
class DepthMap:
    """A depth grid plus the scaling that maps it into the workspace.

    samples[j][i] is the depth at lattice column i, row j. `spacing` is the
    workspace length of one lattice step (uniform in x and y); `depth_scale`
    multiplies stored samples to get workspace z.
    """

    samples: np.ndarray
    spacing: float = 1.0
    depth_scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"samples must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError(f"depth map must be at least 2x2, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("depth map contains non-finite samples")
        if not (self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not (self.depth_scale > 0):
            raise ValueError(f"depth_scale must be positive, got {self.depth_scale}")
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def extent_x(self) -> float:
        """Workspace length covered by the lattice in x."""
        return (self.width - 1) * self.spacing

    @property
    def extent_y(self) -> float:
        return (self.height - 1) * self.spacing


def default_spacing(width: int, height: int, workspace_extent: float = 1.0) -> float:
    """Spacing that spans the workspace extent with the longer lattice axis."""
    return workspace_extent / (max(width, height) - 1)


def bilinear_on_grid(rows: list[list[float]], width: int, height: int,
                     spacing: float, x: float, y: float) -> float:
    """Bilinear interpolation on a raw grid, clamp-to-edge, no depth scaling.

    Shared by heightfield sampling, gradient lookup, and friction-map queries.
    Pure-scalar arithmetic: this sits on the 1 kHz haptic path.
    """
    gx = x / spacing
    if gx <= 0.0:
        gx = 0.0
    elif gx >= width - 1:
        gx = float(width - 1)
    gy = y / spacing
    if gy <= 0.0:
        gy = 0.0
    elif gy >= height - 1:
        gy = float(height - 1)
    i0 = int(gx)
    if i0 > width - 2:
        i0 = width - 2
    j0 = int(gy)
    if j0 > height - 2:
        j0 = height - 2
    fx = gx - i0
    fy = gy - j0
    r0 = rows[j0]
    r1 = rows[j0 + 1]
    top = r0[i0] * (1.0 - fx) + r0[i0 + 1] * fx
    bot = r1[i0] * (1.0 - fx) + r1[i0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


@dataclass(frozen=True)
class SurfacePoint:
    """A point on the heightfield with its outward (free-space) unit normal."""

    position: Vec3
    normal: Vec3


class Heightfield:
    """Immutable continuous extension of a DepthMap.

    Construction precomputes plain-float row tables and node gradients so the
    per-tick queries avoid numpy scalar overhead. Safe for any number of
    concurrent readers; no internal mutability.
    """

    def __init__(self, depth_map: DepthMap):
        self.depth_map = depth_map
        self.spacing = depth_map.spacing
        self.depth_scale = depth_map.depth_scale
        self.width = depth_map.width
        self.height = depth_map.height
        self._rows = depth_map.samples.tolist()
        # Node gradients of the scaled surface, central differences inside,
        # one-sided at the edges; interpolated bilinearly between nodes.
        scaled = depth_map.samples * depth_map.depth_scale
        gy, gx = np.gradient(scaled, depth_map.spacing)
        self._gx_rows = gx.tolist()
        self._gy_rows = gy.tolist()
        self._proj_tol = _PROJECT_TOL_FACTOR * depth_map.depth_scale

    def sample(self, x: float, y: float) -> float:
        """Surface height at (x, y): bilinear patch value times depth_scale."""
        return bilinear_on_grid(self._rows, self.width, self.height,
                                self.spacing, x, y) * self.depth_scale

    def gradient(self, x: float, y: float) -> tuple[float, float]:
        """(df/dx, df/dy) of the scaled surface from interpolated node gradients."""
        gx = bilinear_on_grid(self._gx_rows, self.width, self.height,
                              self.spacing, x, y)
        gy = bilinear_on_grid(self._gy_rows, self.width, self.height,
                              self.spacing, x, y)
        return gx, gy

    def normal(self, x: float, y: float) -> Vec3:
        """Unit normal pointing into free space (positive z component)."""
        gx, gy = self.gradient(x, y)
        inv = 1.0 / math.sqrt(gx * gx + gy * gy + 1.0)
        return (-gx * inv, -gy * inv, inv)

    def is_penetrating(self, p: Vec3) -> bool:
        """True iff p lies strictly below the surface (f(x, y) > z)."""
        return self.sample(p[0], p[1]) > p[2]

    def surface_point(self, x: float, y: float) -> SurfacePoint:
        """Surface point vertically above/below (x, y)."""
        return SurfacePoint((x, y, self.sample(x, y)), self.normal(x, y))

    def project_to_surface(self, p: Vec3, n: Vec3) -> SurfacePoint:
        """Project p along direction n onto the surface.

        Solves g(t) = f(p_xy + t*n_xy) - (p_z + t*n_z) = 0 by secant
        iteration; falls back to vertical projection at (p_x, p_y) if the
        iteration does not converge. The returned z is re-sampled at the
        final lateral position so the result lies exactly on the surface.
        """
        px, py, pz = p
        nx, ny, nz = n
        g0 = self.sample(px, py) - pz
        if abs(g0) <= self._proj_tol:
            return self.surface_point(px, py)
        t0 = 0.0
        # Second seed: the vertical height error, exact for n = +z on a plane.
        t1 = g0
        g1 = self._residual(px, py, pz, nx, ny, nz, t1)
        for _ in range(_PROJECT_MAX_ITERS):
            if abs(g1) <= self._proj_tol:
                x = px + t1 * nx
                y = py + t1 * ny
                return self.surface_point(x, y)
            denom = g1 - g0
            if denom == 0.0 or not math.isfinite(denom):
                break
            t2 = t1 - g1 * (t1 - t0) / denom
            if not math.isfinite(t2):
                break
            t0, g0 = t1, g1
            t1 = t2
            g1 = self._residual(px, py, pz, nx, ny, nz, t1)
        # Vertical fallback keeps the operation total.
        return self.surface_point(px, py)

    def _residual(self, px, py, pz, nx, ny, nz, t):
        return self.sample(px + t * nx, py + t * ny) - (pz + t * nz)
