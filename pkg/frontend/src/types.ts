/** Wire types for the hapticfield session protocol (JSON messages). */

export interface Envelope {
  type: string;
  seq: number | null;
  payload: Record<string, unknown>;
}

export interface ViewDescriptor {
  model: string;
  level: number;
  origin: [number, number];
  size: [number, number];
  levels: number;
}

export interface NoteEvent {
  t: number;
  zone: number;
  gain: number;
}

export interface FramePayload {
  tick: number;
  hip: [number, number, number];
  proxy: [number, number, number];
  force: [number, number, number];
  contact: boolean;
  stuck: boolean;
  mu_d: number;
  iters: number;
  events: NoteEvent[];
  view: ViewDescriptor;
}

export interface TilePayload {
  view: ViewDescriptor;
  width: number;
  height: number;
  stride: number;
  spacing: number;
  depth_scale: number;
  samples: number[];
  friction: number[];
}

export interface HelloPayload {
  view: ViewDescriptor;
  rate: number;
  publish_every: number;
  models: string[];
}

export type ClientCommand =
  | { type: 'hip_move'; payload: { x: number; y: number; z: number } }
  | { type: 'select_model'; payload: { name: string } }
  | { type: 'select_level'; payload: { level: number } }
  | { type: 'select_roi'; payload: { center: [number, number]; extent: number; depth_gain?: number } }
  | { type: 'set_material'; payload: { k?: number; rho?: number; mu_s?: number; mu_max?: number; g0?: number } }
  | { type: 'toggle_friction'; payload: { on: boolean } }
  | { type: 'reset'; payload: Record<string, never> };

export function hipMove(x: number, y: number, z: number): ClientCommand {
  return { type: 'hip_move', payload: { x, y, z } };
}

export function selectLevel(level: number): ClientCommand {
  return { type: 'select_level', payload: { level } };
}

export function selectRoi(center: [number, number], extent: number): ClientCommand {
  return { type: 'select_roi', payload: { center, extent } };
}
