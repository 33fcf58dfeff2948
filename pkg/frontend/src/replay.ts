/** Landmark replay: pick the clip frame under the playhead and fit its
 * 68-point sketch into a canvas box. Pixels from the pipeline are y-up;
 * canvas is y-down, so the fit flips vertically. */

import type { ClipFrame, ClipFrames } from "./types.js";

export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

// iBUG 68 connectivity (0-based, open or closed polylines) for the face sketch
export const SKETCH_PATHS: { closed: boolean; indices: number[] }[] = [
  { closed: false, indices: range(0, 17) }, // jaw
  { closed: false, indices: range(17, 22) }, // left brow
  { closed: false, indices: range(22, 27) }, // right brow
  { closed: false, indices: range(27, 31) }, // nose bridge
  { closed: false, indices: range(31, 36) }, // nostrils
  { closed: true, indices: range(36, 42) }, // left eye
  { closed: true, indices: range(42, 48) }, // right eye
  { closed: true, indices: range(48, 60) }, // outer lip
  { closed: true, indices: range(60, 68) }, // inner lip
];

function range(lo: number, hi: number): number[] {
  return Array.from({ length: hi - lo }, (_v, i) => lo + i);
}

export class ClipReplay {
  private readonly frames: ClipFrame[];

  constructor(clip: ClipFrames) {
    this.frames = clip.frames;
  }

  get frameCount(): number {
    return this.frames.length;
  }

  /** Latest frame at or before the playhead (binary search). */
  frameAt(playheadUs: number): ClipFrame | null {
    const frames = this.frames;
    if (frames.length === 0 || playheadUs < (frames[0] as ClipFrame).timestamp_us) {
      return null;
    }
    let lo = 0;
    let hi = frames.length - 1;
    while (lo < hi) {
      const mid = (lo + hi + 1) >> 1;
      if ((frames[mid] as ClipFrame).timestamp_us <= playheadUs) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    return frames[lo] ?? null;
  }
}

/** Scale landmark points uniformly into the box, preserving aspect ratio and
 * flipping y for canvas coordinates. */
export function fitPoints(points: [number, number][], box: Box, margin = 0.08): [number, number][] {
  if (points.length === 0) {
    return [];
  }
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const [x, y] of points) {
    minX = Math.min(minX, x);
    maxX = Math.max(maxX, x);
    minY = Math.min(minY, y);
    maxY = Math.max(maxY, y);
  }
  const spanX = Math.max(1e-9, maxX - minX);
  const spanY = Math.max(1e-9, maxY - minY);
  const inner = 1 - 2 * margin;
  const scale = Math.min((box.width * inner) / spanX, (box.height * inner) / spanY);
  const offsetX = box.x + (box.width - spanX * scale) / 2;
  const offsetY = box.y + (box.height - spanY * scale) / 2;
  return points.map(([x, y]) => [offsetX + (x - minX) * scale, offsetY + (maxY - y) * scale]);
}
