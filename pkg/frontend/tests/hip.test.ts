import { describe, expect, it } from 'vitest';

import { pointerToHip } from '../src/hip.js';
import { flatTile } from './fixtures.js';

const CANVAS = { width: 400, height: 300 };

describe('pointerToHip', () => {
  it('maps the canvas center onto the surface at the tile center', () => {
    const tile = flatTile(0.5);
    const cmd = pointerToHip(CANVAS, { x: 200, y: 150 }, tile, 0);
    expect(cmd).not.toBeNull();
    expect(cmd!.type).toBe('hip_move');
    const p = cmd!.payload as { x: number; y: number; z: number };
    expect(p.x).toBeCloseTo(0.5, 12);
    expect(p.y).toBeCloseTo(0.5, 12);
    expect(p.z).toBeCloseTo(0.5, 12); // on the surface at zero offset
  });

  it('penetrates below the surface with a negative depth offset', () => {
    const tile = flatTile(0.5);
    const cmd = pointerToHip(CANVAS, { x: 100, y: 75 }, tile, -0.02);
    const p = cmd!.payload as { x: number; y: number; z: number };
    expect(p.z).toBeCloseTo(0.48, 12);
    expect(p.x).toBeCloseTo(0.25, 12);
  });

  it('returns no command when the pointer leaves the canvas', () => {
    const tile = flatTile(0.5);
    expect(pointerToHip(CANVAS, { x: -5, y: 10 }, tile, 0)).toBeNull();
    expect(pointerToHip(CANVAS, { x: 10, y: 301 }, tile, 0)).toBeNull();
  });
});
