/** UI state: tool selection, brush, overlay, queued strokes, server echo. */

import type { ConfigOverrides, SegmentStats, Stroke } from './api.js';

export type Tool = 'fg' | 'bg' | 'erase' | 'pan';

export interface UiState {
  sessionId: string | null;
  imageSize: { w: number; h: number } | null;
  tool: Tool;
  brushRadius: number;
  overlayOpacity: number;
  /** Strokes painted locally but not yet acknowledged by the server. */
  pendingStrokes: Stroke[];
  seedCounts: { fg: number; bg: number };
  lastStats: SegmentStats | null;
  /** Exact PNG bytes of the last mask the server returned. */
  lastMaskPng: Uint8Array | null;
  config: ConfigOverrides;
  segmentInFlight: boolean;
}

export function initialState(): UiState {
  return {
    sessionId: null,
    imageSize: null,
    tool: 'fg',
    brushRadius: 4,
    overlayOpacity: 0.5,
    pendingStrokes: [],
    seedCounts: { fg: 0, bg: 0 },
    lastStats: null,
    lastMaskPng: null,
    config: {},
    segmentInFlight: false,
  };
}

/** Canonical scribble colors, matching the annotation convention the engine
 * reads: green foreground, red background.  Display-theme independent. */
export const STROKE_COLORS: Record<Exclude<Tool, 'pan'>, string> = {
  fg: 'rgb(0, 255, 0)',
  bg: 'rgb(255, 0, 0)',
  erase: 'rgba(255, 255, 255, 0.8)',
};
