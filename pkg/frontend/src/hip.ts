/** Pointer-to-HIP mapping: viewport coordinates become workspace targets.
 * The pointer wheel supplies the depth offset (negative penetrates). */

import { Tile } from './tile.js';
import { hipMove, type ClientCommand } from './types.js';

export interface CanvasRect {
  width: number;
  height: number;
}

export interface PointerPosition {
  x: number;
  y: number;
}

export function pointerToHip(
  canvas: CanvasRect,
  pointer: PointerPosition,
  tile: Tile,
  depthOffset: number,
): ClientCommand | null {
  if (pointer.x < 0 || pointer.y < 0 || pointer.x > canvas.width || pointer.y > canvas.height) {
    return null;
  }
  const x = (pointer.x / canvas.width) * tile.extentX;
  const y = (pointer.y / canvas.height) * tile.extentY;
  const z = tile.heightAt(x, y) + depthOffset;
  return hipMove(x, y, z);
}
