/** Shaded-relief rendering of the active tile into an RGBA buffer. */

import { Tile } from './tile.js';

const LIGHT: [number, number, number] = [-0.5, -0.5, 0.7071];

export interface ReliefImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray;
}

export function shadedRelief(tile: Tile, frictionOverlay = false): ReliefImage {
  const w = tile.width;
  const h = tile.height;
  const rgba = new Uint8ClampedArray(w * h * 4);
  const s = tile.samples;
  const inv = 1 / Math.hypot(LIGHT[0], LIGHT[1], LIGHT[2]);
  const lx = LIGHT[0] * inv;
  const ly = LIGHT[1] * inv;
  const lz = LIGHT[2] * inv;
  for (let j = 0; j < h; j++) {
    for (let i = 0; i < w; i++) {
      const i0 = Math.max(i - 1, 0);
      const i1 = Math.min(i + 1, w - 1);
      const j0 = Math.max(j - 1, 0);
      const j1 = Math.min(j + 1, h - 1);
      const gx = ((s[j * w + i1] - s[j * w + i0]) * tile.depthScale)
        / ((i1 - i0) * tile.spacing);
      const gy = ((s[j1 * w + i] - s[j0 * w + i]) * tile.depthScale)
        / ((j1 - j0) * tile.spacing);
      const norm = 1 / Math.sqrt(gx * gx + gy * gy + 1);
      const shade = Math.max(0, (-gx * lx - gy * ly + lz) * norm);
      const value = Math.round(40 + 200 * shade);
      const k = (j * w + i) * 4;
      if (frictionOverlay) {
        const mu = Math.min(1, tile.friction[j * w + i]);
        rgba[k] = Math.round(value * (1 - mu) + 255 * mu);
        rgba[k + 1] = Math.round(value * (1 - 0.6 * mu));
        rgba[k + 2] = Math.round(value * (1 - mu));
      } else {
        rgba[k] = value;
        rgba[k + 1] = value;
        rgba[k + 2] = value;
      }
      rgba[k + 3] = 255;
    }
  }
  return { width: w, height: h, rgba };
}
