"""Point-proxy contact engine: per-tick proxy update with friction.

The proxy chases the haptic interface point (HIP) along the surface tangent,
scaled by a step gain; static friction can hold it in place and dynamic
friction attenuates the step. All arithmetic here is plain-scalar Python:
one proxy step must fit comfortably inside a 1 kHz servo tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Heightfield, Vec3, bilinear_on_grid

DEFAULT_MAX_INNER = 100   # proxy updates per haptic tick
DEFAULT_EPS = 1e-7        # |v_t| below this counts as converged (workspace units)
_SEGMENT_PROBES = 8


@dataclass(frozen=True)
class Material:
    """Contact material: spring stiffness, step gain, friction limits."""

    stiffness_k: float = 300.0
    rho: float = 0.1
    mu_s: float = 0.2
    mu_max: float = 0.9
    workspace_radius: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if not (self.stiffness_k > 0):
            raise ValueError(f"stiffness_k must be positive, got {self.stiffness_k}")
        if self.mu_s < 0:
            raise ValueError(f"mu_s must be >= 0, got {self.mu_s}")


@dataclass(frozen=True)
class ProbeState:
    """HIP plus proxy positions and the contact/static-hold flags."""

    hip: Vec3
    proxy: Vec3
    in_contact: bool = False
    stuck: bool = False

    @staticmethod
    def free(hip: Vec3) -> "ProbeState":
        """Free-space state: proxy collocated with the HIP."""
        hip = (float(hip[0]), float(hip[1]), float(hip[2]))
        return ProbeState(hip=hip, proxy=hip, in_contact=False, stuck=False)


@dataclass(frozen=True)
class ContactForces:
    """Reaction-force decomposition relative to the surface normal."""

    total: Vec3
    normal_mag: float
    tangent_mag: float
    beta: float  # angle between force and normal, radians, in [0, pi/2]


@dataclass(frozen=True)
class FrictionDecision:
    stuck: bool
    factor: float          # tangential step multiplier in [0, 1]
    resultant_mag: float   # |f_r| = |f_t| * factor, 0 when stuck


@dataclass(frozen=True)
class ProxyKinematics:
    """Per-step geometry at the proxy (diagnostics and tests)."""

    n: Vec3
    v_h: Vec3
    v_t: Vec3


class FrictionGrid:
    """Dynamic-friction coefficients on the depth lattice, bilinear lookup."""

    def __init__(self, grid: np.ndarray, spacing: float):
        grid = np.asarray(grid, dtype=np.float64)
        self.grid = grid
        self.spacing = float(spacing)
        self.height, self.width = grid.shape
        self._rows = grid.tolist()

    def sample(self, x: float, y: float) -> float:
        return bilinear_on_grid(self._rows, self.width, self.height,
                                self.spacing, x, y)

    @staticmethod
    def constant(value: float, like: Heightfield) -> "FrictionGrid":
        grid = np.full((like.height, like.width), float(value))
        return FrictionGrid(grid, like.spacing)


def tangent_direction(n: Vec3, v_h: Vec3) -> Vec3:
    """Component of v_h tangent to the surface: v_h - (n . v_h) n."""
    d = n[0] * v_h[0] + n[1] * v_h[1] + n[2] * v_h[2]
    return (v_h[0] - d * n[0], v_h[1] - d * n[1], v_h[2] - d * n[2])


def reaction_force(hip: Vec3, proxy: Vec3, stiffness_k: float) -> Vec3:
    """Spring force F = -k (X_h - X_p) fed back to the device."""
    return (-stiffness_k * (hip[0] - proxy[0]),
            -stiffness_k * (hip[1] - proxy[1]),
            -stiffness_k * (hip[2] - proxy[2]))


def contact_forces(force: Vec3, n: Vec3) -> ContactForces:
    """Split a reaction force into normal/tangential magnitudes and beta."""
    fmag = math.sqrt(force[0] ** 2 + force[1] ** 2 + force[2] ** 2)
    if fmag == 0.0:
        return ContactForces(total=force, normal_mag=0.0, tangent_mag=0.0, beta=0.0)
    cos_b = abs(force[0] * n[0] + force[1] * n[1] + force[2] * n[2]) / fmag
    if cos_b > 1.0:
        cos_b = 1.0
    sin_b = math.sqrt(1.0 - cos_b * cos_b)
    return ContactForces(total=force, normal_mag=fmag * cos_b,
                         tangent_mag=fmag * sin_b, beta=math.acos(cos_b))


def friction_gate(forces: ContactForces, mu_s: float, mu_d: float) -> FrictionDecision:
    """Static hold test plus the dynamic step attenuation factor.

    Static contact while |f_t| < mu_s |f_n|. Otherwise the tangential step
    is scaled by max(0, 1 - mu_d cot(beta)); the clamp keeps friction from
    reversing motion, and covers the beta -> 0 singularity.
    """
    if forces.tangent_mag < mu_s * forces.normal_mag:
        return FrictionDecision(stuck=True, factor=0.0, resultant_mag=0.0)
    if mu_d == 0.0:
        return FrictionDecision(stuck=False, factor=1.0,
                                resultant_mag=forces.tangent_mag)
    if forces.tangent_mag == 0.0:
        # Purely normal force: cot(beta) diverges, clamp to zero motion.
        return FrictionDecision(stuck=False, factor=0.0, resultant_mag=0.0)
    factor = 1.0 - mu_d * (forces.normal_mag / forces.tangent_mag)
    if factor < 0.0:
        factor = 0.0
    return FrictionDecision(stuck=False, factor=factor,
                            resultant_mag=forces.tangent_mag * factor)


def kinematics(state: ProbeState, hf: Heightfield) -> ProxyKinematics:
    """Normal, HIP offset, and tangent step direction at the current proxy."""
    n = hf.normal(state.proxy[0], state.proxy[1])
    v_h = (state.hip[0] - state.proxy[0],
           state.hip[1] - state.proxy[1],
           state.hip[2] - state.proxy[2])
    return ProxyKinematics(n=n, v_h=v_h, v_t=tangent_direction(n, v_h))


def _segment_clear(hf: Heightfield, a: Vec3, b: Vec3) -> bool:
    """Probe interior points of segment a->b for penetration."""
    ax, ay, az = a
    dx, dy, dz = b[0] - ax, b[1] - ay, b[2] - az
    if dx == 0.0 and dy == 0.0 and dz == 0.0:
        return True
    for k in range(1, _SEGMENT_PROBES):
        t = k / _SEGMENT_PROBES
        if hf.sample(ax + t * dx, ay + t * dy) > az + t * dz:
            return False
    return True


def _transition(state: ProbeState, hf: Heightfield) -> ProbeState:
    """Contact entry/release bookkeeping; hip is fixed for the tick."""
    hip = state.hip
    hip_inside = hf.is_penetrating(hip)
    if not state.in_contact:
        if hip_inside:
            # First contact: constrain the proxy to the surface point at the
            # HIP's lateral coordinates.
            sp = hf.surface_point(hip[0], hip[1])
            return replace(state, proxy=sp.position, in_contact=True, stuck=False)
        if not _segment_clear(hf, state.proxy, hip):
            # Tunnelled through a ridge between ticks: capture conservatively
            # at the HIP's lateral surface point; releases next tick if clear.
            sp = hf.surface_point(hip[0], hip[1])
            return replace(state, proxy=sp.position, in_contact=True, stuck=False)
        return replace(state, proxy=hip, in_contact=False, stuck=False)
    if not hip_inside and _segment_clear(hf, state.proxy, hip):
        return replace(state, proxy=hip, in_contact=False, stuck=False)
    return state


def _contact_update(state: ProbeState, hf: Heightfield, material: Material,
                    friction: FrictionGrid | None):
    """One tangential chase step. Returns (state, vt_norm, mu_d, moved)."""
    px, py, pz = state.proxy
    n = hf.normal(px, py)
    vhx = state.hip[0] - px
    vhy = state.hip[1] - py
    vhz = state.hip[2] - pz
    d = n[0] * vhx + n[1] * vhy + n[2] * vhz
    vtx = vhx - d * n[0]
    vty = vhy - d * n[1]
    vtz = vhz - d * n[2]
    vt_norm = math.sqrt(vtx * vtx + vty * vty + vtz * vtz)
    mu_d = friction.sample(px, py) if friction is not None else 0.0
    k = material.stiffness_k
    forces = contact_forces((-k * vhx, -k * vhy, -k * vhz), n)
    gate = friction_gate(forces, material.mu_s, mu_d)
    if gate.stuck:
        return replace(state, stuck=True), vt_norm, mu_d, False
    if gate.factor == 0.0 or vt_norm == 0.0:
        return replace(state, stuck=False), vt_norm, mu_d, False
    step = material.rho * gate.factor
    moved = (px + step * vtx, py + step * vty, pz + step * vtz)
    sp = hf.project_to_surface(moved, n)
    return replace(state, proxy=sp.position, stuck=False), vt_norm, mu_d, True


def proxy_step(state: ProbeState, hf: Heightfield, material: Material,
               friction: FrictionGrid | None = None) -> ProbeState:
    """Advance the proxy one update: transition handling plus one chase step."""
    state = _transition(state, hf)
    if not state.in_contact:
        return state
    state, _, _, _ = _contact_update(state, hf, material, friction)
    return state


@dataclass(frozen=True)
class TickResult:
    """Outcome of one haptic tick: final state plus loop diagnostics."""

    state: ProbeState
    inner_iters: int
    vt_norm: float
    mu_d: float


def tick(state: ProbeState, hf: Heightfield, material: Material,
         friction: FrictionGrid | None = None,
         max_inner: int = DEFAULT_MAX_INNER, eps: float = DEFAULT_EPS) -> TickResult:
    """One haptic tick: transition once, then iterate the contact branch.

    The inner loop runs until the tangential step magnitude drops below eps,
    the proxy sticks (or friction fully clamps the step), or the iteration
    budget is exhausted.
    """
    if max_inner < 1:
        raise ValueError(f"max_inner must be >= 1, got {max_inner}")
    state = _transition(state, hf)
    if not state.in_contact:
        return TickResult(state=state, inner_iters=0, vt_norm=0.0, mu_d=0.0)
    iters = 0
    vt_norm = 0.0
    mu_d = 0.0
    while iters < max_inner:
        iters += 1
        state, vt_norm, mu_d, moved = _contact_update(state, hf, material, friction)
        if vt_norm < eps or state.stuck or not moved:
            break
    return TickResult(state=state, inner_iters=iters, vt_norm=vt_norm, mu_d=mu_d)


def converge_inner(state: ProbeState, hf: Heightfield, material: Material,
                   friction: FrictionGrid | None = None,
                   max_iters: int = DEFAULT_MAX_INNER,
                   eps: float = DEFAULT_EPS) -> ProbeState:
    """Run the contact branch to rest (or budget); see `tick` for details."""
    return tick(state, hf, material, friction, max_inner=max_iters, eps=eps).state
