/**
 * The question heatmap is rendered as a single-hue layer whose per-pixel
 * alpha is the question value scaled by the user's opacity slider, so the
 * prediction underneath stays readable while the asked region glows.
 */

import type { Rgba } from "./montage.js";

export const OVERLAY_HUE: [number, number, number] = [255, 96, 0];

export function questionOverlay(values: number[][], opacity: number): Rgba {
  const height = values.length;
  const width = height > 0 ? values[0].length : 0;
  const data = new Uint8ClampedArray(width * height * 4);
  const alpha = Math.min(1, Math.max(0, opacity));
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 4;
      data[i] = OVERLAY_HUE[0];
      data[i + 1] = OVERLAY_HUE[1];
      data[i + 2] = OVERLAY_HUE[2];
      data[i + 3] = Math.round(255 * alpha * values[y][x]);
    }
  }
  return { width, height, data };
}
