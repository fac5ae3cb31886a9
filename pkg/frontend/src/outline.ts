/**
 * Marching-squares boundary segments for the mask overlay outline.
 *
 * Operates on a flat 0/1 mask; display-only (the outline is never sent back
 * to the server).  Each boundary cell contributes line segments in pixel
 * coordinates, where mask sample (x, y) is treated as a point at (x, y) and
 * segments run along the half-integer contour of the 0.5 level set.
 */

export interface Segment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function maskOutline(
  bits: Uint8Array,
  width: number,
  height: number,
): Segment[] {
  if (bits.length !== width * height) {
    throw new Error(`mask length ${bits.length} != ${width}x${height}`);
  }
  // Sample on a grid padded with background so outlines close at the border.
  const at = (x: number, y: number): number => {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0;
    return bits[y * width + x]! > 0 ? 1 : 0;
  };
  const segments: Segment[] = [];
  for (let y = -1; y < height; y++) {
    for (let x = -1; x < width; x++) {
      const tl = at(x, y);
      const tr = at(x + 1, y);
      const bl = at(x, y + 1);
      const br = at(x + 1, y + 1);
      const code = (tl << 3) | (tr << 2) | (br << 1) | bl;
      if (code === 0 || code === 15) continue;
      const cx = x + 0.5;
      const cy = y + 0.5;
      // Edge midpoints of the 2x2 sample cell.
      const top: [number, number] = [cx + 0.5, cy];
      const bottom: [number, number] = [cx + 0.5, cy + 1];
      const left: [number, number] = [cx, cy + 0.5];
      const right: [number, number] = [cx + 1, cy + 0.5];
      const add = (a: [number, number], b: [number, number]) =>
        segments.push({ x0: a[0], y0: a[1], x1: b[0], y1: b[1] });
      switch (code) {
        case 1: case 14: add(left, bottom); break;
        case 2: case 13: add(bottom, right); break;
        case 3: case 12: add(left, right); break;
        case 4: case 11: add(top, right); break;
        case 6: case 9: add(top, bottom); break;
        case 7: case 8: add(left, top); break;
        case 5: add(left, top); add(bottom, right); break;
        case 10: add(left, bottom); add(top, right); break;
      }
    }
  }
  return segments;
}
