import math

import numpy as np
import pytest

from hapticfield.audio import ZoneMap
from hapticfield.geometry import Heightfield
from hapticfield.harness import (HipSchedule, Trajectory, bench_step,
                                 drag_trajectory, friction_lag_metric,
                                 poke_trajectory, run_session, sweep_trajectory,
                                 trace_from_csv, trace_to_csv,
                                 trajectory_from_command_log, trajectory_from_csv,
                                 trajectory_from_spec, trajectory_to_csv)
from hapticfield.models import (make_flat_map, make_pillar_zones,
                                make_sinusoid_map, make_textured_scan)
from hapticfield.proxy import FrictionGrid, Material

FLAT = Heightfield(make_flat_map(n=33, level=0.5, depth_scale=1.0))
MAT = Material(rho=0.1, mu_s=0.0)


# --- Trajectory -----------------------------------------------------------------

def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(waypoints=((0.0, (0, 0, 0)), (0.0, (1, 1, 1))))
    with pytest.raises(ValueError):
        Trajectory(waypoints=(), rate=1000)
    with pytest.raises(ValueError):
        Trajectory(waypoints=((0.0, (0, 0, 0)),), rate=0)


def test_trajectory_interpolation():
    traj = Trajectory(waypoints=((0.0, (0.0, 0.0, 1.0)), (1.0, (2.0, 0.0, 0.0))))
    assert traj.at(0.0) == (0.0, 0.0, 1.0)
    assert traj.at(1.0) == (2.0, 0.0, 0.0)
    assert traj.at(0.5) == (1.0, 0.0, 0.5)
    assert traj.at(-1.0) == (0.0, 0.0, 1.0)   # held before start
    assert traj.at(99.0) == (2.0, 0.0, 0.0)   # held after end
    assert traj.num_ticks == 1001


def test_trajectory_csv_roundtrip():
    traj = poke_trajectory(0.3, 0.4, 0.8, 0.2)
    back = trajectory_from_csv(trajectory_to_csv(traj))
    assert back.waypoints == traj.waypoints


def test_trajectory_from_spec_kinds():
    poke = trajectory_from_spec({"kind": "poke", "x": 0.5, "y": 0.5,
                                 "z_start": 1.0, "z_end": 0.4})
    assert poke.waypoints[0][1] == (0.5, 0.5, 1.0)
    drag = trajectory_from_spec({"kind": "drag", "start": [0.2, 0.5, 0.9],
                                 "depth_z": 0.45, "end_xy": [0.8, 0.5]})
    assert drag.waypoints[-1][1] == (0.8, 0.5, 0.45)
    sweep = trajectory_from_spec({"kind": "sweep", "start_xy": [0.2, 0.5],
                                  "end_xy": [0.8, 0.5], "clearance": -0.01},
                                 hf=FLAT)
    assert all(abs(p[2] - 0.49) < 1e-12 for _, p in sweep.waypoints)
    pts = trajectory_from_spec({"kind": "waypoints",
                                "points": [[0.0, 0, 0, 1], [1.0, 1, 0, 1]]})
    assert pts.num_ticks == 1001
    with pytest.raises(ValueError):
        trajectory_from_spec({"kind": "orbit"})


# --- run_session -----------------------------------------------------------------

def test_free_space_session_zero_force():
    traj = Trajectory(waypoints=((0.0, (0.1, 0.1, 0.9)), (0.2, (0.9, 0.9, 0.8))))
    trace = run_session(FLAT, MAT, None, None, traj)
    assert len(trace.frames) == traj.num_ticks
    for f in trace.frames:
        assert f.force == (0.0, 0.0, 0.0)
        assert f.proxy == f.hip
        assert not f.in_contact
    assert trace.metrics.convergence_tick is None


def test_vertical_descent_hooke_steady_state():
    k = 300.0
    mat = Material(stiffness_k=k, rho=0.1, mu_s=0.0)
    traj = poke_trajectory(0.5, 0.5, 0.7, 0.46, t_approach=0.2, t_hold=0.3)
    trace = run_session(FLAT, mat, None, None, traj)
    last = trace.frames[-1]
    penetration = 0.5 - last.hip[2]
    fmag = math.sqrt(sum(c * c for c in last.force))
    assert abs(fmag - k * penetration) < 1e-6
    assert last.in_contact


def test_session_is_deterministic():
    dm = make_sinusoid_map(n=65, base=0.5, amplitude=0.03, cycles=2.0)
    hf = Heightfield(dm)
    mu = FrictionGrid.constant(0.3, hf)
    traj = drag_trajectory((0.2, 0.5, 0.8), 0.45, (0.8, 0.5), t_drag=0.3)
    a = run_session(hf, MAT, mu, None, traj)
    b = run_session(hf, MAT, mu, None, traj)
    assert a.frames == b.frames
    assert trace_to_csv(a) == trace_to_csv(b)


def test_contact_frames_keep_proxy_on_surface():
    dm = make_sinusoid_map(n=129, base=0.5, amplitude=0.04, cycles=2.0)
    hf = Heightfield(dm)
    traj = drag_trajectory((0.25, 0.5, 0.7), 0.47, (0.75, 0.5), t_drag=0.4)
    trace = run_session(hf, MAT, None, None, traj)
    assert any(f.in_contact for f in trace.frames)
    for f in trace.frames:
        if f.in_contact:
            residual = abs(f.proxy[2] - hf.sample(f.proxy[0], f.proxy[1]))
            assert residual < 1e-6 * dm.depth_scale
        else:
            assert f.proxy == f.hip


def test_force_bounded_by_max_penetration():
    k = 300.0
    mat = Material(stiffness_k=k, rho=0.1, mu_s=0.0)
    traj = poke_trajectory(0.4, 0.6, 0.8, 0.44, t_approach=0.3, t_hold=0.2)
    trace = run_session(FLAT, mat, None, None, traj)
    max_pen = max(0.5 - f.hip[2] for f in trace.frames)
    for f in trace.frames:
        fmag = math.sqrt(sum(c * c for c in f.force))
        assert fmag <= k * max_pen * (1 + 1e-12)


def test_session_emits_zone_events_once_per_entry():
    n = 33
    labels = make_pillar_zones(n, num_zones=2)
    zm = ZoneMap(labels=labels, spacing=1.0 / (n - 1))
    traj = drag_trajectory((0.2, 0.5, 0.7), 0.45, (0.8, 0.5),
                           t_approach=0.1, t_drag=0.4, t_hold=0.1)
    trace = run_session(FLAT, MAT, None, zm, traj, g0=10.0)
    zones = [e.zone_id for e in trace.events]
    assert zones == [1, 2]
    assert all(e.gain == 1.0 for e in trace.events)  # g0 large: clamped


# --- trace CSV -------------------------------------------------------------------

def test_trace_csv_roundtrip():
    traj = poke_trajectory(0.3, 0.3, 0.7, 0.42, t_approach=0.05, t_hold=0.05)
    trace = run_session(FLAT, MAT, None, None, traj)
    text = trace_to_csv(trace)
    back = trace_from_csv(text)
    assert back.frames == trace.frames
    with pytest.raises(ValueError):
        trace_from_csv("nope\n1,2\n")


# --- friction lag -----------------------------------------------------------------

def test_lag_zero_when_both_frictionless(fig8):
    a = run_session(fig8.hf, fig8.material, None, None, fig8.trajectory,
                    max_inner=fig8.MAX_INNER, eps=fig8.EPS)
    b = run_session(fig8.hf, fig8.material, None, None, fig8.trajectory,
                    max_inner=fig8.MAX_INNER, eps=fig8.EPS)
    lag = friction_lag_metric(a, b)
    assert lag.lag_ticks == 0
    assert lag.max_proxy_z_diff == 0.0


def test_friction_produces_positive_lag(fig8):
    plain = run_session(fig8.hf, fig8.material, None, None, fig8.trajectory,
                        max_inner=fig8.MAX_INNER, eps=fig8.EPS)
    fric = run_session(fig8.hf, fig8.material, fig8.friction, None,
                       fig8.trajectory, max_inner=fig8.MAX_INNER, eps=fig8.EPS)
    lag = friction_lag_metric(plain, fric)
    assert lag.lag_ticks > 0
    assert lag.max_proxy_z_diff < 1e-5


def test_lag_metric_rejects_mismatched_traces(fig8):
    traj_short = poke_trajectory(0.3, 0.3, 0.7, 0.42, t_approach=0.05, t_hold=0.05)
    a = run_session(FLAT, MAT, None, None, traj_short)
    b = run_session(fig8.hf, fig8.material, None, None, fig8.trajectory,
                    max_inner=fig8.MAX_INNER, eps=fig8.EPS)
    with pytest.raises(ValueError):
        friction_lag_metric(a, b)


# --- bench -----------------------------------------------------------------------

def test_bench_rejects_small_sample_counts():
    with pytest.raises(ValueError):
        bench_step(FLAT, MAT, None, samples=100)


def test_bench_latency_and_stability():
    dm = make_textured_scan(n=128)
    hf = Heightfield(dm)
    mu = FrictionGrid.constant(0.3, hf)
    a = bench_step(hf, MAT, mu, samples=2000, seed=1)
    b = bench_step(hf, MAT, mu, samples=2000, seed=2)
    assert a.mean_seconds < 5e-5
    assert a.p99_seconds < 1e-3
    assert a.mean_seconds < 3 * b.mean_seconds
    assert b.mean_seconds < 3 * a.mean_seconds


# --- hip scheduling ---------------------------------------------------------------

def test_hip_schedule_glides_between_targets():
    sched = HipSchedule((0.0, 0.0, 0.0), rate=1000)
    sched.set_target(10, (1.0, 0.0, 0.0))  # gap 10 ticks -> glide over 10
    assert sched.hip_at(10) == (0.0, 0.0, 0.0)
    assert sched.hip_at(15) == (0.5, 0.0, 0.0)
    assert sched.hip_at(20) == (1.0, 0.0, 0.0)
    assert sched.hip_at(25) == (1.0, 0.0, 0.0)


def test_command_log_trajectory_matches_schedule():
    log = [(5, (0.2, 0.0, 0.5)), (10, (0.4, 0.1, 0.5)), (30, (0.4, 0.1, 0.2))]
    traj = trajectory_from_command_log(log, num_ticks=60, initial=(0.0, 0.0, 0.5))
    sched = HipSchedule((0.0, 0.0, 0.5), rate=1000)
    moves = sorted(log)
    mi = 0
    for k in range(60):
        while mi < len(moves) and moves[mi][0] <= k:
            sched.set_target(moves[mi][0], moves[mi][1])
            mi += 1
        assert traj.hip_at_tick(k) == sched.hip_at(k)
