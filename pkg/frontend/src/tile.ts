/** Client-side copy of the active heightfield tile. */

import type { TilePayload, ViewDescriptor } from './types.js';

export class Tile {
  readonly view: ViewDescriptor;
  readonly width: number;
  readonly height: number;
  readonly spacing: number;
  readonly depthScale: number;
  readonly samples: Float64Array;
  readonly friction: Float64Array;

  constructor(payload: TilePayload) {
    this.view = payload.view;
    this.width = payload.width;
    this.height = payload.height;
    this.spacing = payload.spacing;
    this.depthScale = payload.depth_scale;
    this.samples = Float64Array.from(payload.samples);
    this.friction = Float64Array.from(payload.friction);
    if (this.samples.length !== this.width * this.height) {
      throw new Error('tile sample count does not match its dimensions');
    }
  }

  get extentX(): number {
    return (this.width - 1) * this.spacing;
  }

  get extentY(): number {
    return (this.height - 1) * this.spacing;
  }

  /** Bilinear height lookup in workspace coordinates, clamp-to-edge. */
  heightAt(x: number, y: number): number {
    return this.sampleGrid(this.samples, x, y) * this.depthScale;
  }

  frictionAt(x: number, y: number): number {
    return this.sampleGrid(this.friction, x, y);
  }

  private sampleGrid(grid: Float64Array, x: number, y: number): number {
    const w = this.width;
    const h = this.height;
    let gx = x / this.spacing;
    let gy = y / this.spacing;
    gx = Math.min(Math.max(gx, 0), w - 1);
    gy = Math.min(Math.max(gy, 0), h - 1);
    const i0 = Math.min(Math.floor(gx), w - 2);
    const j0 = Math.min(Math.floor(gy), h - 2);
    const fx = gx - i0;
    const fy = gy - j0;
    const r0 = j0 * w;
    const r1 = r0 + w;
    const top = grid[r0 + i0] * (1 - fx) + grid[r0 + i0 + 1] * fx;
    const bot = grid[r1 + i0] * (1 - fx) + grid[r1 + i0 + 1] * fx;
    return top * (1 - fy) + bot * fy;
  }
}
