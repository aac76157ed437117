"""Live session service: streamed HIP targets in, state frames and note
events out.

The haptic loop is authoritative server-side. Clients send sparse commands
over a persistent byte stream carrying JSON messages ({type, seq, payload},
newline-delimited or length-prefixed); the loop applies them at tick
boundaries, advances at the haptic rate, and publishes decimated frames
(latest-wins) while note events are queued and delivered exactly once.
"""

from __future__ import annotations

import json
import math
import socket
import struct
import threading
import time
from dataclasses import replace

from .audio import NoteEvent, ZoneMap, process_contact
from .geometry import Heightfield
from .harness import DEFAULT_RATE, HapticFrame, HipSchedule
from .models import Model, list_models, load_model
from .proxy import (DEFAULT_EPS, DEFAULT_MAX_INNER, FrictionGrid,
                    ProbeState, reaction_force, tick)
from .pyramid import Pyramid, RoiSelection, build_pyramid, select_roi
from .texture import TextureBundle

DEFAULT_PUBLISH_RATE = 60
DEFAULT_NUM_LEVELS = 3


# ---------------------------------------------------------------------------
# Wire framing

class NewlineFraming:
    """One JSON document per line."""

    name = "nl"

    def __init__(self):
        self._buf = b""

    def encode(self, msg: dict) -> bytes:
        return json.dumps(msg, separators=(",", ":")).encode("utf-8") + b"\n"

    def feed(self, data: bytes) -> list[dict]:
        self._buf += data
        out = []
        while b"\n" in self._buf:
            line, self._buf = self._buf.split(b"\n", 1)
            if line.strip():
                out.append(json.loads(line))
        return out


class LengthPrefixFraming:
    """4-byte big-endian length prefix per JSON document."""

    name = "lp"

    def __init__(self):
        self._buf = b""

    def encode(self, msg: dict) -> bytes:
        body = json.dumps(msg, separators=(",", ":")).encode("utf-8")
        return struct.pack(">I", len(body)) + body

    def feed(self, data: bytes) -> list[dict]:
        self._buf += data
        out = []
        while len(self._buf) >= 4:
            (n,) = struct.unpack(">I", self._buf[:4])
            if len(self._buf) < 4 + n:
                break
            out.append(json.loads(self._buf[4:4 + n]))
            self._buf = self._buf[4 + n:]
        return out


FRAMINGS = {"nl": NewlineFraming, "lp": LengthPrefixFraming}


def _finite(*values) -> bool:
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)


class CommandError(ValueError):
    pass


class SessionCore:
    """Deterministic session state machine, one logical tick at a time.

    Pure with respect to wall time: a recorded (tick, command) log replayed
    through a fresh core reproduces the identical frame sequence.
    """

    def __init__(self, models: dict[str, Model], active: str | None = None,
                 rate: int = DEFAULT_RATE, max_inner: int = DEFAULT_MAX_INNER,
                 eps: float = DEFAULT_EPS, num_levels: int = DEFAULT_NUM_LEVELS):
        if not models:
            raise ValueError("need at least one model")
        self.models = models
        self.rate = rate
        self.max_inner = max_inner
        self.eps = eps
        self.num_levels = num_levels
        self.tick_index = 0
        self.friction_enabled = True
        self._pyramids: dict[str, Pyramid] = {}
        self._friction_cache: dict[tuple, FrictionGrid] = {}
        self.command_log: list[tuple[int, dict]] = []
        self._activate_model(active or next(iter(models)))
        self.start_hip = (0.5, 0.5, self.hf.sample(0.5, 0.5) + 0.25)
        self.hip_sched = HipSchedule(self.start_hip, rate)
        self.state = ProbeState.free(self.start_hip)
        self.prev_zone: int | None = None

    # -- model / tile management ------------------------------------------

    def _pyramid(self, name: str) -> Pyramid:
        if name not in self._pyramids:
            dm = self.models[name].depth_map
            levels = self.num_levels
            while levels > 1 and (math.ceil(dm.width / 2 ** (levels - 1)) < 8
                                  or math.ceil(dm.height / 2 ** (levels - 1)) < 8):
                levels -= 1
            self._pyramids[name] = build_pyramid(dm, levels)
        return self._pyramids[name]

    def _is_full_level0(self, sel: RoiSelection, model: Model) -> bool:
        return (sel.level == 0 and sel.depth_gain == 1.0
                and sel.extent >= max(model.depth_map.width, model.depth_map.height))

    def _activate_model(self, name: str) -> None:
        if name not in self.models:
            raise CommandError(f"unknown model: {name}")
        self.model_name = name
        model = self.models[name]
        dm = model.depth_map
        self.material = model.material
        self.g0 = model.g0
        sel = RoiSelection(level=0, center=(dm.width // 2, dm.height // 2),
                           extent=max(dm.width, dm.height))
        self._activate_tile(sel)

    def _activate_tile(self, sel: RoiSelection) -> None:
        model = self.models[self.model_name]
        pyr = self._pyramid(self.model_name)
        if not (0 <= sel.level < pyr.num_levels):
            raise CommandError(f"level out of range: {sel.level} "
                               f"(model has {pyr.num_levels})")
        if self._is_full_level0(sel, model):
            tile = model.depth_map
            origin, tw, th = (0, 0), tile.width, tile.height
            zone_map = model.zone_map
        else:
            tile, mapping = select_roi(pyr, sel)
            origin = mapping.origin
            tw, th = mapping.tile_width, mapping.tile_height
            zone_map = None
            if model.zone_map is not None:
                stride = 2 ** sel.level
                level_labels = model.zone_map.labels[::stride, ::stride]
                labels = level_labels[origin[1]:origin[1] + th,
                                      origin[0]:origin[0] + tw]
                zone_map = ZoneMap(labels=labels, spacing=tile.spacing)
        self.selection = sel
        self.tile_origin = origin
        self.tile_size = (tw, th)
        self.hf = Heightfield(tile)
        self.zone_map = zone_map
        self.friction = self._friction_for_tile(tile)

    def _friction_for_tile(self, tile) -> FrictionGrid:
        key = (self.model_name, self.selection.level, self.tile_origin,
               self.tile_size, self.material.workspace_radius, self.material.mu_max)
        if key not in self._friction_cache:
            bundle = TextureBundle.from_depth_map(
                tile, workspace_radius=self.material.workspace_radius,
                mu_max=self.material.mu_max)
            self._friction_cache[key] = FrictionGrid(bundle.friction, tile.spacing)
        return self._friction_cache[key]

    def descriptor(self) -> dict:
        return {"model": self.model_name,
                "level": self.selection.level,
                "origin": list(self.tile_origin),
                "size": list(self.tile_size),
                "levels": self._pyramid(self.model_name).num_levels}

    # -- commands ----------------------------------------------------------

    def apply_command(self, msg: dict) -> dict:
        """Apply one client command at a tick boundary; returns the reply."""
        seq = msg.get("seq")
        try:
            self._dispatch(msg)
        except CommandError as exc:
            return {"type": "error", "seq": seq,
                    "payload": {"message": str(exc)}}
        except (KeyError, TypeError, ValueError) as exc:
            return {"type": "error", "seq": seq,
                    "payload": {"message": f"malformed payload: {exc}"}}
        self.command_log.append((self.tick_index, msg))
        return {"type": "ack", "seq": seq, "payload": {}}

    def _dispatch(self, msg: dict) -> None:
        ctype = msg.get("type")
        payload = msg.get("payload") or {}
        if ctype == "hip_move":
            x, y, z = payload["x"], payload["y"], payload["z"]
            if not _finite(x, y, z):
                raise CommandError("hip_move requires finite coordinates")
            self.hip_sched.set_target(self.tick_index, (x, y, z))
        elif ctype == "select_model":
            self._activate_model(str(payload["name"]))
            self._reset_probe()
        elif ctype == "select_level":
            level = int(payload["level"])
            sel = self._recenter_selection(level)
            self._activate_tile(sel)
            self._reset_probe()
        elif ctype == "select_roi":
            center = payload["center"]
            extent = int(payload["extent"])
            if extent < 2:
                raise CommandError("extent must be >= 2")
            sel = RoiSelection(level=self.selection.level,
                               center=(int(center[0]), int(center[1])),
                               extent=extent,
                               depth_gain=float(payload.get("depth_gain", 1.0)))
            self._activate_tile(sel)
            self._reset_probe()
        elif ctype == "set_material":
            self._set_material(payload)
        elif ctype == "toggle_friction":
            self.friction_enabled = bool(payload["on"])
        elif ctype == "reset":
            self._reset_probe()
        else:
            raise CommandError(f"unknown command: {ctype!r}")

    def _recenter_selection(self, level: int) -> RoiSelection:
        pyr = self._pyramid(self.model_name)
        if not (0 <= level < pyr.num_levels):
            raise CommandError(f"level out of range: {level} "
                               f"(model has {pyr.num_levels})")
        lm = pyr.levels[level]
        return RoiSelection(level=level, center=(lm.width // 2, lm.height // 2),
                            extent=max(lm.width, lm.height),
                            depth_gain=self.selection.depth_gain)

    def _set_material(self, payload: dict) -> None:
        cur = self.material
        fields = {}
        for key, attr in (("k", "stiffness_k"), ("stiffness_k", "stiffness_k"),
                          ("rho", "rho"), ("mu_s", "mu_s"), ("mu_max", "mu_max")):
            if key in payload:
                value = payload[key]
                if not _finite(value):
                    raise CommandError(f"{key} must be finite")
                fields[attr] = float(value)
        if "g0" in payload:
            if not _finite(payload["g0"]) or payload["g0"] <= 0:
                raise CommandError("g0 must be finite and positive")
            self.g0 = float(payload["g0"])
        if fields:
            try:
                new_material = replace(cur, **fields)
            except ValueError as exc:
                raise CommandError(str(exc))
            mu_changed = new_material.mu_max != cur.mu_max
            self.material = new_material
            if mu_changed:
                self.friction = self._friction_for_tile(self.hf.depth_map)

    def _reset_probe(self) -> None:
        hip = self.hip_sched.hip_at(self.tick_index)
        self.state = ProbeState.free(hip)
        self.prev_zone = None

    # -- ticking -----------------------------------------------------------

    def advance(self) -> HapticFrame:
        """Advance exactly one haptic tick; mirrors the sim-harness loop."""
        k = self.tick_index
        hip = self.hip_sched.hip_at(k)
        state = replace(self.state, hip=hip)
        friction = self.friction if self.friction_enabled else None
        material = (self.material if self.friction_enabled
                    else replace(self.material, mu_s=0.0))
        result = tick(state, self.hf, material, friction,
                      max_inner=self.max_inner, eps=self.eps)
        state = result.state
        if state.in_contact:
            force = reaction_force(state.hip, state.proxy, material.stiffness_k)
        else:
            force = (0.0, 0.0, 0.0)
        events: tuple[NoteEvent, ...] = ()
        if self.zone_map is not None:
            evs, self.prev_zone = process_contact(self.prev_zone, state, force,
                                                  self.zone_map, self.g0, t=k)
            events = tuple(evs)
        self.state = state
        self.tick_index = k + 1
        return HapticFrame(t=k, hip=hip, proxy=state.proxy, force=force,
                           in_contact=state.in_contact, stuck=state.stuck,
                           mu_d=result.mu_d, inner_iters=result.inner_iters,
                           events=events)


def tile_payload(core: SessionCore, max_axis: int = 128) -> dict:
    """Active-tile snapshot for thin clients: heights, friction, mapping.

    Large tiles are strided down to at most max_axis samples per axis; the
    reported spacing is scaled so the workspace mapping stays exact.
    """
    dm = core.hf.depth_map
    stride = max(1, -(-max(dm.width, dm.height) // max_axis))
    samples = dm.samples[::stride, ::stride]
    friction = core.friction.grid[::stride, ::stride]
    h, w = samples.shape
    return {"view": core.descriptor(),
            "width": w,
            "height": h,
            "stride": stride,
            "spacing": dm.spacing * stride,
            "depth_scale": dm.depth_scale,
            "samples": [round(float(v), 6) for v in samples.ravel()],
            "friction": [round(float(v), 4) for v in friction.ravel()]}


def frame_payload(frame: HapticFrame, pending_events: list[NoteEvent],
                  descriptor: dict) -> dict:
    return {"tick": frame.t,
            "hip": list(frame.hip),
            "proxy": list(frame.proxy),
            "force": list(frame.force),
            "contact": frame.in_contact,
            "stuck": frame.stuck,
            "mu_d": frame.mu_d,
            "iters": frame.inner_iters,
            "events": [{"t": e.t, "zone": e.zone_id, "gain": e.gain}
                       for e in pending_events],
            "view": descriptor}


class _Outbox:
    """Per-connection send staging: latest-wins frame slot, lossless queue
    for everything else."""

    def __init__(self):
        self._lock = threading.Lock()
        self._frame: dict | None = None
        self._queue: list[dict] = []
        self._signal = threading.Event()

    def put_frame(self, msg: dict) -> None:
        with self._lock:
            self._frame = msg  # overwrite: slow clients skip stale frames
        self._signal.set()

    def put(self, msg: dict) -> None:
        with self._lock:
            self._queue.append(msg)
        self._signal.set()

    def drain(self, timeout: float = 0.1) -> list[dict]:
        if not self._signal.wait(timeout):
            return []
        with self._lock:
            out = self._queue
            self._queue = []
            if self._frame is not None:
                out.append(self._frame)
                self._frame = None
            self._signal.clear()
        return out


class ServerSession(threading.Thread):
    """One connection: reader + writer + 1 kHz loop around a SessionCore."""

    _ids = 0

    def __init__(self, conn: socket.socket, models: dict[str, Model],
                 framing: str = "nl", publish_rate: int = DEFAULT_PUBLISH_RATE,
                 rate: int = DEFAULT_RATE, realtime: bool = True):
        ServerSession._ids += 1
        super().__init__(name=f"session-{ServerSession._ids}", daemon=True)
        self.conn = conn
        self.core = SessionCore(models, rate=rate)
        self.framing_name = framing
        self.publish_every = max(1, rate // publish_rate)
        self.realtime = realtime
        self.seq = 0
        self.outbox = _Outbox()
        self._commands: list[dict] = []
        self._cmd_lock = threading.Lock()
        self._seq_lock = threading.Lock()
        self._stop = threading.Event()

    def _next_seq(self) -> int:
        with self._seq_lock:
            self.seq += 1
            return self.seq

    def run(self):
        reader = threading.Thread(target=self._read_loop, daemon=True)
        writer = threading.Thread(target=self._write_loop, daemon=True)
        reader.start()
        writer.start()
        hello = {"type": "hello", "seq": self._next_seq(),
                 "payload": {"view": self.core.descriptor(),
                             "rate": self.core.rate,
                             "publish_every": self.publish_every,
                             "models": sorted(self.core.models)}}
        self.outbox.put(hello)
        self.outbox.put({"type": "tile", "seq": self._next_seq(),
                         "payload": tile_payload(self.core)})
        try:
            self._tick_loop()
        finally:
            self._stop.set()
            try:
                self.conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.conn.close()

    def stop(self):
        self._stop.set()

    def _read_loop(self):
        framing = FRAMINGS[self.framing_name]()
        while not self._stop.is_set():
            try:
                data = self.conn.recv(65536)
            except OSError:
                break
            if not data:
                break
            try:
                msgs = framing.feed(data)
            except (ValueError, json.JSONDecodeError):
                self.outbox.put({"type": "error", "seq": None,
                                 "payload": {"message": "malformed message"}})
                continue
            with self._cmd_lock:
                self._commands.extend(msgs)
        self._stop.set()

    def _write_loop(self):
        framing = FRAMINGS[self.framing_name]()
        while not self._stop.is_set():
            for msg in self.outbox.drain(timeout=0.1):
                if "seq" not in msg or msg["seq"] is None:
                    msg["seq"] = self._next_seq()
                try:
                    self.conn.sendall(framing.encode(msg))
                except OSError:
                    self._stop.set()
                    return

    def _tick_loop(self):
        period = 1.0 / self.core.rate
        next_time = time.perf_counter()
        pending_events: list[NoteEvent] = []
        while not self._stop.is_set():
            with self._cmd_lock:
                commands, self._commands = self._commands, []
            for msg in commands:
                reply = self.core.apply_command(msg)
                self.outbox.put(reply)
                if (reply["type"] == "ack" and msg.get("type") in
                        ("select_model", "select_level", "select_roi")):
                    self.outbox.put({"type": "tile", "seq": self._next_seq(),
                                     "payload": tile_payload(self.core)})
            frame = self.core.advance()
            pending_events.extend(frame.events)
            if frame.t % self.publish_every == 0:
                payload = frame_payload(frame, pending_events,
                                        self.core.descriptor())
                pending_events = []
                self.outbox.put_frame({"type": "frame", "seq": self._next_seq(),
                                       "payload": payload})
            if self.realtime:
                next_time += period
                delay = next_time - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
                elif delay < -0.25:
                    next_time = time.perf_counter()  # fell far behind: resync


class HapticServer:
    """Accepts connections and runs one ServerSession per client."""

    def __init__(self, model_dir, host: str = "127.0.0.1", port: int = 0,
                 framing: str = "nl", publish_rate: int = DEFAULT_PUBLISH_RATE,
                 rate: int = DEFAULT_RATE):
        if framing not in FRAMINGS:
            raise ValueError(f"framing must be one of {sorted(FRAMINGS)}")
        self.models = {name: load_model(path)
                       for name, path in list_models(model_dir).items()}
        self.framing = framing
        self.publish_rate = publish_rate
        self.rate = rate
        self.sock = socket.create_server((host, port))
        self.host, self.port = self.sock.getsockname()[:2]
        self._sessions: list[ServerSession] = []
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None

    def start(self):
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._accept_thread.start()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self.sock.accept()
            except OSError:
                break
            session = ServerSession(conn, self.models, framing=self.framing,
                                    publish_rate=self.publish_rate,
                                    rate=self.rate)
            self._sessions.append(session)
            session.start()

    def serve_forever(self):
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.close()

    def close(self):
        self._stop.set()
        for s in self._sessions:
            s.stop()
        try:
            self.sock.close()
        except OSError:
            pass


class SessionClient:
    """Minimal blocking client for tests and scripting."""

    def __init__(self, host: str, port: int, framing: str = "nl",
                 timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.framing = FRAMINGS[framing]()
        self._seq = 0
        self._inbox: list[dict] = []

    def send(self, ctype: str, payload: dict | None = None) -> int:
        self._seq += 1
        msg = {"type": ctype, "seq": self._seq, "payload": payload or {}}
        self.sock.sendall(self.framing.encode(msg))
        return self._seq

    def recv(self, timeout: float = 5.0) -> dict | None:
        deadline = time.monotonic() + timeout
        while not self._inbox:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            self.sock.settimeout(remaining)
            try:
                data = self.sock.recv(65536)
            except socket.timeout:
                return None
            if not data:
                return None
            self._inbox.extend(self.framing.feed(data))
        return self._inbox.pop(0)

    def recv_until(self, predicate, timeout: float = 5.0) -> dict | None:
        deadline = time.monotonic() + timeout
        while True:
            msg = self.recv(timeout=max(0.0, deadline - time.monotonic()))
            if msg is None:
                return None
            if predicate(msg):
                return msg

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass
