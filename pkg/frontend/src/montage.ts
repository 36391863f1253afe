/**
 * Pure-pixel montage compositor for exporting an episode strip: one column
 * per forward pass, rows are answer swatch / prediction / question. Works
 * on raw RGBA buffers so it is testable without a canvas; the browser
 * wrapper draws the result onto a canvas for download.
 */

export interface Rgba {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA, row-major
}

export interface StripTiles {
  /** Swatch color consumed by pass i (null for the first pass). */
  answers: ([number, number, number] | null)[];
  predictions: Rgba[];
  /** Question emitted by pass i (grayscale rendered to RGBA). */
  questions: (Rgba | null)[];
}

export const SWATCH_BLANK = 230;

export function makeRgba(width: number, height: number, fill = 255): Rgba {
  const data = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < data.length; i += 4) {
    data[i] = data[i + 1] = data[i + 2] = fill;
    data[i + 3] = 255;
  }
  return { width, height, data };
}

function blit(dst: Rgba, src: Rgba, x0: number, y0: number, scale: number): void {
  for (let y = 0; y < src.height * scale; y++) {
    const sy = Math.floor(y / scale);
    for (let x = 0; x < src.width * scale; x++) {
      const sx = Math.floor(x / scale);
      const si = (sy * src.width + sx) * 4;
      const di = ((y0 + y) * dst.width + (x0 + x)) * 4;
      dst.data[di] = src.data[si];
      dst.data[di + 1] = src.data[si + 1];
      dst.data[di + 2] = src.data[si + 2];
      dst.data[di + 3] = 255;
    }
  }
}

function fillRect(dst: Rgba, x0: number, y0: number, w: number, h: number, rgb: [number, number, number]): void {
  for (let y = y0; y < y0 + h; y++) {
    for (let x = x0; x < x0 + w; x++) {
      const di = (y * dst.width + x) * 4;
      dst.data[di] = rgb[0];
      dst.data[di + 1] = rgb[1];
      dst.data[di + 2] = rgb[2];
      dst.data[di + 3] = 255;
    }
  }
}

export function stripColumns(tiles: StripTiles): number {
  return tiles.predictions.length;
}

export function composeStrip(
  tiles: StripTiles,
  scale = 4,
  gap = 2,
): { image: Rgba; columns: number } {
  const columns = stripColumns(tiles);
  if (columns === 0) throw new Error("cannot compose an empty strip");
  const tileW = tiles.predictions[0].width;
  const tileH = tiles.predictions[0].height;
  const outW = columns * tileW * scale + (columns - 1) * gap;
  const outH = 3 * tileH * scale + 2 * gap;
  const image = makeRgba(outW, outH);
  for (let col = 0; col < columns; col++) {
    const x0 = col * (tileW * scale + gap);
    const answer = tiles.answers[col];
    fillRect(
      image,
      x0,
      0,
      tileW * scale,
      tileH * scale,
      answer ?? [SWATCH_BLANK, SWATCH_BLANK, SWATCH_BLANK],
    );
    blit(image, tiles.predictions[col], x0, tileH * scale + gap, scale);
    const question = tiles.questions[col];
    if (question) {
      blit(image, question, x0, 2 * (tileH * scale + gap), scale);
    }
  }
  return { image, columns };
}
