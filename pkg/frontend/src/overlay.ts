/**
 * Overlay compositing math: mask bits -> tinted RGBA pixels.
 *
 * Pure so it can be verified without a canvas; the canvas layer only blits
 * the result.  Foreground pixels get the tint at the requested opacity,
 * background pixels stay fully transparent.
 */

export const OVERLAY_TINT: readonly [number, number, number] = [64, 131, 255];

export function renderOverlayRgba(
  bits: Uint8Array,
  width: number,
  height: number,
  opacity: number,
  tint: readonly [number, number, number] = OVERLAY_TINT,
): Uint8ClampedArray<ArrayBuffer> {
  if (bits.length !== width * height) {
    throw new Error(`mask length ${bits.length} != ${width}x${height}`);
  }
  const alpha = Math.round(255 * Math.min(1, Math.max(0, opacity)));
  const out = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let i = 0; i < bits.length; i++) {
    if (bits[i]! > 0) {
      out[i * 4] = tint[0];
      out[i * 4 + 1] = tint[1];
      out[i * 4 + 2] = tint[2];
      out[i * 4 + 3] = alpha;
    }
  }
  return out;
}
