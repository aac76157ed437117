"""Shared scenario builders for the simulation test suites."""

import pytest

from hapticfield.geometry import Heightfield
from hapticfield.harness import Trajectory
from hapticfield.models import make_sinusoid_map
from hapticfield.proxy import FrictionGrid, Material
from hapticfield.texture import TextureBundle


class Fig8Scenario:
    """Sinusoid-surface validation setup: poke, surface-following drag at
    fixed penetration, rise to a shallow hold at a slope point. Designed so
    both the frictionless and friction runs converge during the final hold
    and the friction run converges strictly later."""

    EPS = 5e-6
    MAX_INNER = 1  # one proxy update per tick: convergence is tick-resolved

    def __init__(self):
        self.depth_map = make_sinusoid_map(n=257, base=0.5, amplitude=0.02,
                                           cycles=3.0, depth_scale=1.0)
        self.hf = Heightfield(self.depth_map)
        bundle = TextureBundle.from_depth_map(self.depth_map, workspace_radius=0.5)
        self.friction = FrictionGrid(bundle.friction, self.depth_map.spacing)
        self.material = Material(rho=0.1, mu_s=0.0)
        self.trajectory = self._build_trajectory()

    def _build_trajectory(self) -> Trajectory:
        x0, x1, y = 0.19, 0.31, 0.5
        depth, hold_depth = 0.01, 2e-6
        hf = self.hf
        pts = [(0.0, (x0, y, hf.sample(x0, y) + 0.1)),
               (0.15, (x0, y, hf.sample(x0, y) - depth))]
        nseg = 24
        for i in range(1, nseg + 1):
            u = i / nseg
            x = x0 + u * (x1 - x0)
            pts.append((0.15 + 0.3 * u, (x, y, hf.sample(x, y) - depth)))
        pts.append((0.65, (x1, y, hf.sample(x1, y) - hold_depth)))
        pts.append((0.95, (x1, y, hf.sample(x1, y) - hold_depth)))
        return Trajectory(waypoints=tuple(pts), rate=1000)


@pytest.fixture(scope="session")
def fig8():
    return Fig8Scenario()
