"""Zone-triggered audio events with force-proportional gain.

Lateral regions of the surface map to integer zones (musical pillars).
Entering a zone during contact emits one NoteEvent; playback loops a single
extracted waveform cycle under an exponential decay envelope.
"""

from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .proxy import ProbeState, Vec3

# Seven notes of the sargam as just-intonation ratios over the tonic.
SARGAM_RATIOS = (1.0, 9 / 8, 5 / 4, 4 / 3, 3 / 2, 5 / 3, 15 / 8)


@dataclass(frozen=True)
class ZoneMap:
    """Integer labels aligned with the depth lattice; 0 means no zone."""

    labels: np.ndarray
    spacing: float

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
        if labels.min() < 0:
            raise ValueError("zone labels must be non-negative")
        object.__setattr__(self, "labels", labels.astype(np.int32))

    @property
    def zone_ids(self) -> set[int]:
        ids = set(int(z) for z in np.unique(self.labels))
        ids.discard(0)
        return ids

    def zone_at(self, x: float, y: float) -> int | None:
        """Nearest-lattice label lookup, clamped to the grid."""
        h, w = self.labels.shape
        i = int(round(x / self.spacing))
        j = int(round(y / self.spacing))
        i = 0 if i < 0 else (w - 1 if i > w - 1 else i)
        j = 0 if j < 0 else (h - 1 if j > h - 1 else j)
        label = int(self.labels[j, i])
        return label if label != 0 else None


@dataclass(frozen=True)
class AudioClip:
    """One waveform period of a zone's note."""

    zone_id: int
    cycle: np.ndarray
    sample_rate: int

    def __post_init__(self):
        cycle = np.asarray(self.cycle, dtype=np.float64)
        if cycle.size < 2:
            raise ValueError("cycle needs at least 2 samples")
        if np.max(np.abs(cycle)) > 1.0:
            raise ValueError("cycle samples must lie in [-1, 1]")
        object.__setattr__(self, "cycle", cycle)


@dataclass(frozen=True)
class NoteEvent:
    t: int
    zone_id: int
    gain: float


def note_gain(force: Vec3, g0: float) -> float:
    """Volume proportional to the rendered force, clamped to 1."""
    mag = math.sqrt(force[0] ** 2 + force[1] ** 2 + force[2] ** 2)
    return min(1.0, g0 * mag)


def process_contact(prev_zone: int | None, state: ProbeState, force: Vec3,
                    zm: ZoneMap, g0: float, t: int = 0
                    ) -> tuple[list[NoteEvent], int | None]:
    """Emit a note on first contact with a zone; returns (events, new prev_zone).

    A note fires when the probe is in contact over a labeled cell whose zone
    differs from the last triggered one. Releasing contact resets the
    tracker, so re-touching the same pillar plays it again.
    """
    if not state.in_contact:
        return [], None
    zone = zm.zone_at(state.proxy[0], state.proxy[1])
    if zone is None or zone == prev_zone:
        return [], prev_zone
    return [NoteEvent(t=t, zone_id=zone, gain=note_gain(force, g0))], zone


def synth_note(clip: AudioClip, duration: float, gain: float,
               decay_tau: float = 0.5) -> np.ndarray:
    """Loop the clip's cycle for `duration` seconds under gain * exp(-t/tau)."""
    if not (duration > 0):
        raise ValueError(f"duration must be positive, got {duration}")
    n = round(duration * clip.sample_rate)
    if n == 0:
        return np.zeros(0)
    reps = -(-n // clip.cycle.size)  # ceil
    tiled = np.tile(clip.cycle, reps)[:n]
    if math.isinf(decay_tau):
        return gain * tiled
    t = np.arange(n, dtype=np.float64) / clip.sample_rate
    return gain * np.exp(-t / decay_tau) * tiled


def sine_clip(zone_id: int, freq: float, sample_rate: int = 44100) -> AudioClip:
    """Synthetic single-cycle stand-in when no recorded pillar note exists."""
    period = max(2, round(sample_rate / freq))
    phase = np.arange(period, dtype=np.float64) * (2.0 * math.pi / period)
    return AudioClip(zone_id=zone_id, cycle=np.sin(phase), sample_rate=sample_rate)


def sargam_clips(num_zones: int = 7, tonic_hz: float = 240.0,
                 sample_rate: int = 44100) -> dict[int, AudioClip]:
    """Default demo bank: zones 1..n over the seven primary-note ratios."""
    clips = {}
    for z in range(1, num_zones + 1):
        ratio = SARGAM_RATIOS[(z - 1) % len(SARGAM_RATIOS)]
        octave = 2 ** ((z - 1) // len(SARGAM_RATIOS))
        clips[z] = sine_clip(z, tonic_hz * ratio * octave, sample_rate)
    return clips


def clip_from_wav(path: str | Path, zone_id: int) -> AudioClip:
    """Load a mono 16-bit WAV holding one pre-extracted waveform cycle."""
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono WAV")
        if wf.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit samples")
        rate = wf.getframerate()
        frames = wf.readframes(wf.getnframes())
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(zone_id=zone_id, cycle=samples, sample_rate=rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    pcm = np.clip(np.asarray(samples) * 32767.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def load_zone_clips(mapping_path: str | Path) -> dict[int, AudioClip]:
    """Load the {zone_id: wav file} JSON map; paths are relative to the JSON."""
    mapping_path = Path(mapping_path)
    with open(mapping_path, "r", encoding="utf-8") as fh:
        mapping = json.load(fh)
    clips = {}
    for zone, rel in mapping.items():
        clips[int(zone)] = clip_from_wav(mapping_path.parent / rel, int(zone))
    return clips


def events_to_csv(events: list[NoteEvent]) -> str:
    lines = ["t,zone,gain"]
    for ev in events:
        lines.append(f"{ev.t},{ev.zone_id},{repr(ev.gain)}")
    return "\n".join(lines) + "\n"


def events_from_csv(text: str) -> list[NoteEvent]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "t,zone,gain":
        raise ValueError("bad event CSV header")
    out = []
    for ln in lines[1:]:
        t, zone, gain = ln.split(",")
        out.append(NoteEvent(t=int(t), zone_id=int(zone), gain=float(gain)))
    return out
