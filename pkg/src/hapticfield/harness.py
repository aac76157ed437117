"""Deterministic fixed-timestep session runner and benchmarks.

Replays scripted HIP trajectories at the haptic rate through the proxy
engine, records gap-free per-tick frames, derives validation metrics, and
measures single-step wall-clock latency. Logical traces are machine
independent; wall-clock numbers live only in the metrics sidecar.
"""

from __future__ import annotations

import json
import math
import time
from bisect import bisect_right
from dataclasses import dataclass, replace

import numpy as np

from .audio import NoteEvent, ZoneMap, process_contact
from .geometry import Heightfield, Vec3
from .proxy import (DEFAULT_EPS, DEFAULT_MAX_INNER, FrictionGrid, Material,
                    ProbeState, proxy_step, reaction_force, tick)

DEFAULT_RATE = 1000

TRACE_HEADER = "t,hip_x,hip_y,hip_z,proxy_x,proxy_y,proxy_z,fx,fy,fz,contact,stuck,mu_d,iters"


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear HIP path sampled at the haptic rate."""

    waypoints: tuple[tuple[float, Vec3], ...]
    rate: int = DEFAULT_RATE

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not self.waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        times = tuple(t for t, _ in self.waypoints)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint timestamps must be strictly increasing")
        object.__setattr__(self, "_times", times)

    @property
    def num_ticks(self) -> int:
        return int(math.floor(self.waypoints[-1][0] * self.rate)) + 1

    def at(self, t: float) -> Vec3:
        """Linear interpolation, held constant beyond the endpoints."""
        times = self._times
        if t <= times[0]:
            return self.waypoints[0][1]
        if t >= times[-1]:
            return self.waypoints[-1][1]
        i = bisect_right(times, t) - 1
        t0, p0 = self.waypoints[i]
        t1, p1 = self.waypoints[i + 1]
        u = (t - t0) / (t1 - t0)
        return (p0[0] + u * (p1[0] - p0[0]),
                p0[1] + u * (p1[1] - p0[1]),
                p0[2] + u * (p1[2] - p0[2]))

    def hip_at_tick(self, k: int) -> Vec3:
        return self.at(k / self.rate)


def poke_trajectory(x: float, y: float, z_start: float, z_end: float,
                    t_approach: float = 0.5, t_hold: float = 0.5,
                    rate: int = DEFAULT_RATE) -> Trajectory:
    """Vertical descent to z_end, then hold."""
    return Trajectory(waypoints=(
        (0.0, (x, y, z_start)),
        (t_approach, (x, y, z_end)),
        (t_approach + t_hold, (x, y, z_end)),
    ), rate=rate)


def drag_trajectory(start: Vec3, depth_z: float, end_xy: tuple[float, float],
                    t_approach: float = 0.3, t_drag: float = 1.0,
                    t_hold: float = 0.3, rate: int = DEFAULT_RATE) -> Trajectory:
    """Descend at start's (x, y) to depth_z, drag laterally, then hold."""
    x0, y0, z0 = start
    return Trajectory(waypoints=(
        (0.0, (x0, y0, z0)),
        (t_approach, (x0, y0, depth_z)),
        (t_approach + t_drag, (end_xy[0], end_xy[1], depth_z)),
        (t_approach + t_drag + t_hold, (end_xy[0], end_xy[1], depth_z)),
    ), rate=rate)


def sweep_trajectory(hf: Heightfield, start_xy: tuple[float, float],
                     end_xy: tuple[float, float], clearance: float,
                     num_points: int = 33, t_total: float = 2.0,
                     rate: int = DEFAULT_RATE) -> Trajectory:
    """Follow the surface laterally at a fixed offset (negative penetrates)."""
    pts = []
    for i in range(num_points):
        u = i / (num_points - 1)
        x = start_xy[0] + u * (end_xy[0] - start_xy[0])
        y = start_xy[1] + u * (end_xy[1] - start_xy[1])
        pts.append((u * t_total, (x, y, hf.sample(x, y) + clearance)))
    return Trajectory(waypoints=tuple(pts), rate=rate)


def trajectory_from_csv(text: str, rate: int = DEFAULT_RATE) -> Trajectory:
    """Rows of `t,x,y,z`; a header row is permitted and skipped."""
    pts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.lower().startswith("t,"):
            continue
        t, x, y, z = (float(v) for v in line.split(","))
        pts.append((t, (x, y, z)))
    return Trajectory(waypoints=tuple(pts), rate=rate)


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = ["t,x,y,z"]
    for t, (x, y, z) in traj.waypoints:
        lines.append(f"{repr(t)},{repr(x)},{repr(y)},{repr(z)}")
    return "\n".join(lines) + "\n"


def trajectory_from_spec(spec: dict, hf: Heightfield | None = None) -> Trajectory:
    """Build a trajectory from a JSON generator description."""
    kind = spec.get("kind")
    rate = int(spec.get("rate", DEFAULT_RATE))
    if kind == "poke":
        return poke_trajectory(spec["x"], spec["y"], spec["z_start"], spec["z_end"],
                               spec.get("t_approach", 0.5), spec.get("t_hold", 0.5),
                               rate)
    if kind == "drag":
        return drag_trajectory(tuple(spec["start"]), spec["depth_z"],
                               tuple(spec["end_xy"]), spec.get("t_approach", 0.3),
                               spec.get("t_drag", 1.0), spec.get("t_hold", 0.3), rate)
    if kind == "sweep":
        if hf is None:
            raise ValueError("sweep trajectory needs the heightfield")
        return sweep_trajectory(hf, tuple(spec["start_xy"]), tuple(spec["end_xy"]),
                                spec["clearance"], spec.get("num_points", 33),
                                spec.get("t_total", 2.0), rate)
    if kind == "waypoints":
        pts = tuple((float(p[0]), (float(p[1]), float(p[2]), float(p[3])))
                    for p in spec["points"])
        return Trajectory(waypoints=pts, rate=rate)
    raise ValueError(f"unknown trajectory kind: {kind!r}")


@dataclass(frozen=True)
class HapticFrame:
    """Immutable per-tick record."""

    t: int
    hip: Vec3
    proxy: Vec3
    force: Vec3
    in_contact: bool
    stuck: bool
    mu_d: float
    inner_iters: int
    events: tuple[NoteEvent, ...] = ()


@dataclass(frozen=True)
class SessionMetrics:
    mean_step_seconds: float
    p50_step_seconds: float
    p99_step_seconds: float
    convergence_tick: int | None
    eps: float

    def to_dict(self) -> dict:
        return {"mean_step_seconds": self.mean_step_seconds,
                "p50_step_seconds": self.p50_step_seconds,
                "p99_step_seconds": self.p99_step_seconds,
                "convergence_tick": self.convergence_tick,
                "eps": self.eps}


@dataclass(frozen=True)
class SessionTrace:
    frames: tuple[HapticFrame, ...]
    metrics: SessionMetrics

    @property
    def events(self) -> list[NoteEvent]:
        out = []
        for f in self.frames:
            out.extend(f.events)
        return out


def run_session(hf: Heightfield, material: Material,
                friction: FrictionGrid | None, zone_map: ZoneMap | None,
                traj: Trajectory, max_inner: int = DEFAULT_MAX_INNER,
                eps: float = DEFAULT_EPS, g0: float = 1.0,
                initial_prev_zone: int | None = None) -> SessionTrace:
    """Replay a trajectory tick by tick; fully deterministic frame log.

    Per tick: interpolate the HIP, run the inner proxy loop, compute the
    reaction force from the settled state, then fold contact transitions
    into note events.
    """
    state = ProbeState.free(traj.hip_at_tick(0))
    prev_zone = initial_prev_zone
    frames: list[HapticFrame] = []
    step_times: list[float] = []
    convergence_tick: int | None = None
    seen_contact = False
    for k in range(traj.num_ticks):
        hip = traj.hip_at_tick(k)
        state = replace(state, hip=hip)
        t0 = time.perf_counter()
        result = tick(state, hf, material, friction, max_inner=max_inner, eps=eps)
        step_times.append(time.perf_counter() - t0)
        state = result.state
        if state.in_contact:
            force = reaction_force(state.hip, state.proxy, material.stiffness_k)
        else:
            force = (0.0, 0.0, 0.0)
        events: tuple[NoteEvent, ...] = ()
        if zone_map is not None:
            evs, prev_zone = process_contact(prev_zone, state, force, zone_map,
                                             g0, t=k)
            events = tuple(evs)
        if state.in_contact:
            seen_contact = True
        if (convergence_tick is None and seen_contact and state.in_contact
                and result.vt_norm < eps):
            convergence_tick = k
        frames.append(HapticFrame(t=k, hip=hip, proxy=state.proxy, force=force,
                                  in_contact=state.in_contact, stuck=state.stuck,
                                  mu_d=result.mu_d, inner_iters=result.inner_iters,
                                  events=events))
    arr = np.asarray(step_times)
    metrics = SessionMetrics(
        mean_step_seconds=float(arr.mean()),
        p50_step_seconds=float(np.percentile(arr, 50)),
        p99_step_seconds=float(np.percentile(arr, 99)),
        convergence_tick=convergence_tick,
        eps=eps)
    return SessionTrace(frames=tuple(frames), metrics=metrics)


@dataclass(frozen=True)
class FrictionLag:
    lag_ticks: int
    max_proxy_z_diff: float
    convergence_tick_plain: int
    convergence_tick_friction: int


def friction_lag_metric(trace_plain: SessionTrace,
                        trace_friction: SessionTrace) -> FrictionLag:
    """Convergence delay caused by friction, plus post-convergence z gap.

    Both traces must come from the same trajectory and surface, differing
    only in friction.
    """
    if len(trace_plain.frames) != len(trace_friction.frames):
        raise ValueError("traces have different lengths")
    cp = trace_plain.metrics.convergence_tick
    cf = trace_friction.metrics.convergence_tick
    if cp is None or cf is None:
        raise ValueError("both traces must converge to compare lag")
    start = max(cp, cf)
    zdiff = max(abs(a.proxy[2] - b.proxy[2]) for a, b in
                zip(trace_plain.frames[start:], trace_friction.frames[start:]))
    return FrictionLag(lag_ticks=cf - cp, max_proxy_z_diff=zdiff,
                       convergence_tick_plain=cp, convergence_tick_friction=cf)


def trace_to_csv(trace: SessionTrace) -> str:
    lines = [TRACE_HEADER]
    for f in trace.frames:
        lines.append(",".join([
            str(f.t),
            repr(f.hip[0]), repr(f.hip[1]), repr(f.hip[2]),
            repr(f.proxy[0]), repr(f.proxy[1]), repr(f.proxy[2]),
            repr(f.force[0]), repr(f.force[1]), repr(f.force[2]),
            "1" if f.in_contact else "0",
            "1" if f.stuck else "0",
            repr(f.mu_d),
            str(f.inner_iters),
        ]))
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str, metrics: SessionMetrics | None = None) -> SessionTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError("bad trace CSV header")
    frames = []
    for ln in lines[1:]:
        parts = ln.split(",")
        frames.append(HapticFrame(
            t=int(parts[0]),
            hip=(float(parts[1]), float(parts[2]), float(parts[3])),
            proxy=(float(parts[4]), float(parts[5]), float(parts[6])),
            force=(float(parts[7]), float(parts[8]), float(parts[9])),
            in_contact=parts[10] == "1",
            stuck=parts[11] == "1",
            mu_d=float(parts[12]),
            inner_iters=int(parts[13])))
    if metrics is None:
        metrics = SessionMetrics(0.0, 0.0, 0.0, None, DEFAULT_EPS)
    return SessionTrace(frames=tuple(frames), metrics=metrics)


@dataclass(frozen=True)
class BenchResult:
    mean_seconds: float
    p50_seconds: float
    p99_seconds: float
    samples: int

    def to_dict(self) -> dict:
        return {"mean_seconds": self.mean_seconds, "p50_seconds": self.p50_seconds,
                "p99_seconds": self.p99_seconds, "samples": self.samples}


def bench_step(hf: Heightfield, material: Material,
               friction: FrictionGrid | None, samples: int,
               seed: int = 0) -> BenchResult:
    """Wall-clock distribution of single proxy steps on random contact states.

    States are generated up front (excluded from timing): proxies on the
    surface with HIPs displaced into penetration at varied offsets.
    """
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    rng = np.random.default_rng(seed)
    ex = (hf.width - 1) * hf.spacing
    ey = (hf.height - 1) * hf.spacing
    states = []
    for _ in range(samples):
        px = float(rng.uniform(0.0, ex))
        py = float(rng.uniform(0.0, ey))
        pz = hf.sample(px, py)
        hx = float(px + rng.uniform(-0.05, 0.05) * ex)
        hy = float(py + rng.uniform(-0.05, 0.05) * ey)
        hz = float(hf.sample(hx, hy) - rng.uniform(1e-4, 2e-2))
        states.append(ProbeState(hip=(hx, hy, hz), proxy=(px, py, pz),
                                 in_contact=True, stuck=False))
    timer = time.perf_counter
    times = np.empty(samples)
    for i, st in enumerate(states):
        t0 = timer()
        proxy_step(st, hf, material, friction)
        times[i] = timer() - t0
    return BenchResult(mean_seconds=float(times.mean()),
                       p50_seconds=float(np.percentile(times, 50)),
                       p99_seconds=float(np.percentile(times, 99)),
                       samples=samples)


def metrics_to_json(metrics: SessionMetrics) -> str:
    return json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n"


class HipSchedule:
    """Turns sparse HIP targets into a per-tick piecewise-linear path.

    Each target glides from the hip's current position over the gap since
    the previous target (minimum one tick), which reproduces a steady
    client's cadence as plain linear interpolation. Used by the live
    session service and by `trajectory_from_command_log` so a recorded
    command log replays to the identical hip sequence.
    """

    def __init__(self, initial: Vec3, rate: int = DEFAULT_RATE):
        self.rate = rate
        self._current: Vec3 = (float(initial[0]), float(initial[1]), float(initial[2]))
        self._glide_from: Vec3 = self._current
        self._glide_start = 0
        self._glide_end = 0
        self._target: Vec3 = self._current
        self._last_target_tick = 0

    def set_target(self, tick_index: int, target: Vec3) -> None:
        gap = max(1, tick_index - self._last_target_tick)
        self._glide_from = self._current
        self._glide_start = tick_index
        self._glide_end = tick_index + gap
        self._target = (float(target[0]), float(target[1]), float(target[2]))
        self._last_target_tick = tick_index

    def hip_at(self, tick_index: int) -> Vec3:
        if tick_index >= self._glide_end:
            self._current = self._target
            return self._target
        u = (tick_index - self._glide_start) / (self._glide_end - self._glide_start)
        a, b = self._glide_from, self._target
        self._current = (a[0] + u * (b[0] - a[0]),
                         a[1] + u * (b[1] - a[1]),
                         a[2] + u * (b[2] - a[2]))
        return self._current


def trajectory_from_command_log(log: list[tuple[int, Vec3]], num_ticks: int,
                                initial: Vec3,
                                rate: int = DEFAULT_RATE) -> Trajectory:
    """Expand (tick, hip target) pairs into the equivalent dense trajectory.

    Applies the same glide rule as the live session loop and emits one
    waypoint per tick, so replaying through `run_session` reproduces the
    hip sequence bit-for-bit.
    """
    sched = HipSchedule(initial, rate)
    moves = sorted(log)
    mi = 0
    pts: list[tuple[float, Vec3]] = []
    for k in range(num_ticks):
        while mi < len(moves) and moves[mi][0] <= k:
            sched.set_target(moves[mi][0], moves[mi][1])
            mi += 1
        pts.append((k / rate, sched.hip_at(k)))
    return Trajectory(waypoints=tuple(pts), rate=rate)
