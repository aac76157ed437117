import { Tile } from '../src/tile.js';
import type { Envelope, FramePayload, TilePayload, ViewDescriptor } from '../src/types.js';

export function flatView(level = 0): ViewDescriptor {
  return { model: 'flat', level, origin: [0, 0], size: [5, 5], levels: 3 };
}

export function flatTilePayload(height = 0.5, n = 5): TilePayload {
  return {
    view: flatView(),
    width: n,
    height: n,
    stride: 1,
    spacing: 1 / (n - 1),
    depth_scale: 1.0,
    samples: new Array(n * n).fill(height),
    friction: new Array(n * n).fill(0.2),
  };
}

export function flatTile(height = 0.5, n = 5): Tile {
  return new Tile(flatTilePayload(height, n));
}

export function frameMsg(seq: number, overrides: Partial<FramePayload> = {}): Envelope {
  const payload: FramePayload = {
    tick: seq * 16,
    hip: [0.5, 0.5, 0.4],
    proxy: [0.5, 0.5, 0.5],
    force: [0, 0, 30],
    contact: true,
    stuck: false,
    mu_d: 0.2,
    iters: 3,
    events: [],
    view: flatView(),
    ...overrides,
  };
  return { type: 'frame', seq, payload: payload as unknown as Record<string, unknown> };
}
