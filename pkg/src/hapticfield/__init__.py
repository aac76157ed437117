"""Haptic rendering of depth-map surfaces with a point-proxy algorithm."""

from .geometry import DepthMap, Heightfield, SurfacePoint, default_spacing
from .texture import (FilterParams, TextureBundle, bilateral_filter,
                      bilateral_filter_brute, curvature_maps, extract_texture,
                      friction_map)
from .proxy import (ContactForces, FrictionGrid, Material, ProbeState,
                    contact_forces, converge_inner, friction_gate, proxy_step,
                    reaction_force, tangent_direction, tick)
from .pyramid import Pyramid, RoiSelection, TileMapping, build_pyramid, select_roi
from .audio import AudioClip, NoteEvent, ZoneMap, process_contact, synth_note
from .harness import (BenchResult, HapticFrame, SessionTrace, Trajectory,
                      bench_step, friction_lag_metric, run_session)

__version__ = "0.1.0"
