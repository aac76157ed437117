/** Level-of-detail controls: zoom and pan gestures become level/ROI commands. */

import { selectLevel, selectRoi, type ClientCommand, type ViewDescriptor } from './types.js';

/** Focus is the gesture's position as a fraction of the tile, [0, 1] each axis. */
export function zoomIn(view: ViewDescriptor,
                       focus: [number, number] = [0.5, 0.5]): ClientCommand[] {
  if (view.level <= 0) return []; // already at the finest level
  const cx = Math.round((view.origin[0] + focus[0] * view.size[0]) * 2);
  const cy = Math.round((view.origin[1] + focus[1] * view.size[1]) * 2);
  const extent = Math.max(view.size[0], view.size[1]);
  return [selectLevel(view.level - 1), selectRoi([cx, cy], extent)];
}

export function zoomOut(view: ViewDescriptor): ClientCommand[] {
  if (view.level >= view.levels - 1) return [];
  const cx = Math.round((view.origin[0] + view.size[0] / 2) / 2);
  const cy = Math.round((view.origin[1] + view.size[1] / 2) / 2);
  const extent = Math.max(view.size[0], view.size[1]);
  return [selectLevel(view.level + 1), selectRoi([cx, cy], extent)];
}

/** Pan by a fraction of the current tile; the server clamps to bounds. */
export function pan(view: ViewDescriptor, dxFrac: number, dyFrac: number): ClientCommand[] {
  const cx = Math.round(view.origin[0] + view.size[0] / 2 + dxFrac * view.size[0]);
  const cy = Math.round(view.origin[1] + view.size[1] / 2 + dyFrac * view.size[1]);
  return [selectRoi([cx, cy], Math.max(view.size[0], view.size[1]))];
}
