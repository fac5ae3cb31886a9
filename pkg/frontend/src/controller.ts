/**
 * Session orchestration, kept free of DOM so the interactive loop can be
 * driven headlessly: paint -> queue -> flush -> segment -> overlay bytes.
 *
 * Invariants enforced here:
 *  - the stroke queue always flushes before a segment request;
 *  - at most one segment request is in flight;
 *  - the displayed mask is exactly the server's PNG bytes (no client-side
 *    pixel edits);
 *  - a failed flush keeps the queue for retry;
 *  - a new session never shows the previous session's mask.
 */

import {
  GeosegClient,
  type ConfigOverrides,
  type SeedCounts,
  type SegmentStats,
  type Stroke,
  type StrokeLabel,
} from './api.js';
import { initialState, type Tool, type UiState } from './state.js';

export class SessionController {
  readonly state: UiState;
  private activeStroke: Stroke | null = null;

  constructor(private readonly client: GeosegClient, state?: UiState) {
    this.state = state ?? initialState();
  }

  async openImage(image: Blob): Promise<void> {
    const info = await this.client.createSession(image);
    this.state.sessionId = info.id;
    this.state.imageSize = { w: info.w, h: info.h };
    // Everything below belonged to the previous session.
    this.state.pendingStrokes = [];
    this.state.seedCounts = { fg: 0, bg: 0 };
    this.state.lastStats = null;
    this.state.lastMaskPng = null;
    this.activeStroke = null;
  }

  setTool(tool: Tool): void {
    this.state.tool = tool;
  }

  setBrushRadius(radius: number): void {
    if (radius > 0) this.state.brushRadius = radius;
  }

  /** Opacity is pure presentation; changing it must not touch the server. */
  setOverlayOpacity(opacity: number): void {
    this.state.overlayOpacity = Math.min(1, Math.max(0, opacity));
  }

  setConfig(overrides: ConfigOverrides): void {
    this.state.config = { ...this.state.config, ...overrides };
  }

  beginStroke(x: number, y: number): void {
    if (this.state.tool === 'pan' || this.state.sessionId === null) return;
    this.activeStroke = {
      label: this.state.tool as StrokeLabel,
      points: [[x, y]],
      radius: this.state.brushRadius,
    };
  }

  extendStroke(x: number, y: number): void {
    this.activeStroke?.points.push([x, y]);
  }

  /** Pointer-up: queue the stroke and flush the queue to the server. */
  async endStroke(): Promise<SeedCounts | null> {
    if (this.activeStroke !== null) {
      this.state.pendingStrokes.push(this.activeStroke);
      this.activeStroke = null;
    }
    return this.flushStrokes();
  }

  /** Send every queued stroke; on failure the queue is kept for retry. */
  async flushStrokes(): Promise<SeedCounts | null> {
    if (this.state.sessionId === null || this.state.pendingStrokes.length === 0) {
      return null;
    }
    const batch = this.state.pendingStrokes;
    const counts = await this.client.sendStrokes(this.state.sessionId, batch);
    // Only drop what was actually acknowledged.
    this.state.pendingStrokes = this.state.pendingStrokes.slice(batch.length);
    this.state.seedCounts = counts;
    return counts;
  }

  get busy(): boolean {
    return this.state.segmentInFlight;
  }

  /** Flush scribbles, then segment; stores the mask bytes verbatim. */
  async runSegmentation(): Promise<SegmentStats> {
    if (this.state.sessionId === null) {
      throw new Error('no session');
    }
    if (this.state.segmentInFlight) {
      throw new Error('segmentation already in flight');
    }
    this.state.segmentInFlight = true;
    try {
      await this.flushStrokes();
      const result = await this.client.segment(
        this.state.sessionId,
        this.state.config,
      );
      this.state.lastMaskPng = result.maskPng;
      this.state.lastStats = result.stats;
      return result.stats;
    } finally {
      this.state.segmentInFlight = false;
    }
  }
}
