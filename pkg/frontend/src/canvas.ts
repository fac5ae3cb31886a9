/**
 * Canvas glue: image display, local stroke echo, mask overlay + outline.
 *
 * Layered canvases: image at the bottom, mask overlay above it, scribbles on
 * top (so strokes stay visible during refinement).  The mask layer is
 * rendered from the exact PNG bytes the server sent; decoding happens here,
 * for display only.
 */

import { maskOutline } from './outline.js';
import { renderOverlayRgba } from './overlay.js';
import { STROKE_COLORS, type Tool } from './state.js';

export interface MaskBitmap {
  bits: Uint8Array;
  width: number;
  height: number;
}

/** Decode a mask PNG (white = foreground) into bits via an offscreen canvas. */
export async function decodeMaskPng(png: Uint8Array): Promise<MaskBitmap> {
  const buf = png.slice().buffer as ArrayBuffer;
  const bitmap = await createImageBitmap(new Blob([buf], { type: 'image/png' }));
  const canvas = document.createElement('canvas');
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('2d context unavailable');
  ctx.drawImage(bitmap, 0, 0);
  const data = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  const bits = new Uint8Array(bitmap.width * bitmap.height);
  for (let i = 0; i < bits.length; i++) {
    bits[i] = data[i * 4]! >= 128 ? 1 : 0;
  }
  return { bits, width: bitmap.width, height: bitmap.height };
}

export class LayeredView {
  constructor(
    private readonly imageLayer: HTMLCanvasElement,
    private readonly overlayLayer: HTMLCanvasElement,
    private readonly scribbleLayer: HTMLCanvasElement,
  ) {}

  resize(w: number, h: number): void {
    for (const layer of [this.imageLayer, this.overlayLayer, this.scribbleLayer]) {
      layer.width = w;
      layer.height = h;
    }
  }

  async showImage(blob: Blob): Promise<void> {
    const bitmap = await createImageBitmap(blob);
    this.resize(bitmap.width, bitmap.height);
    this.ctx(this.imageLayer).drawImage(bitmap, 0, 0);
    this.clearOverlay();
    this.clearScribbles();
  }

  drawStrokeSegment(
    tool: Exclude<Tool, 'pan'>,
    radius: number,
    x0: number,
    y0: number,
    x1: number,
    y1: number,
  ): void {
    const ctx = this.ctx(this.scribbleLayer);
    if (tool === 'erase') {
      ctx.globalCompositeOperation = 'destination-out';
    } else {
      ctx.globalCompositeOperation = 'source-over';
    }
    ctx.strokeStyle = STROKE_COLORS[tool];
    ctx.lineWidth = radius * 2;
    ctx.lineCap = 'round';
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    ctx.globalCompositeOperation = 'source-over';
  }

  showMask(mask: MaskBitmap, opacity: number): void {
    const ctx = this.ctx(this.overlayLayer);
    ctx.clearRect(0, 0, this.overlayLayer.width, this.overlayLayer.height);
    const rgba = renderOverlayRgba(mask.bits, mask.width, mask.height, opacity);
    ctx.putImageData(new ImageData(rgba, mask.width, mask.height), 0, 0);
    ctx.strokeStyle = 'rgba(255, 255, 255, 0.9)';
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (const seg of maskOutline(mask.bits, mask.width, mask.height)) {
      ctx.moveTo(seg.x0, seg.y0);
      ctx.lineTo(seg.x1, seg.y1);
    }
    ctx.stroke();
  }

  clearOverlay(): void {
    this.ctx(this.overlayLayer).clearRect(
      0, 0, this.overlayLayer.width, this.overlayLayer.height,
    );
  }

  clearScribbles(): void {
    this.ctx(this.scribbleLayer).clearRect(
      0, 0, this.scribbleLayer.width, this.scribbleLayer.height,
    );
  }

  private ctx(layer: HTMLCanvasElement): CanvasRenderingContext2D {
    const ctx = layer.getContext('2d');
    if (!ctx) throw new Error('2d context unavailable');
    return ctx;
  }
}
