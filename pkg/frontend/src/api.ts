/**
 * Typed client for the segmentation session service.
 *
 * Endpoints: POST /sessions (multipart image), POST /sessions/{id}/scribbles,
 * POST /sessions/{id}/segment, GET /sessions/{id}/mask, DELETE /sessions/{id}.
 * The mask arrives base64-encoded inside the segment response and is kept as
 * raw PNG bytes; the client never re-encodes or post-processes mask pixels.
 */

export type StrokeLabel = 'fg' | 'bg' | 'erase';

export interface Stroke {
  label: StrokeLabel;
  points: [number, number][];
  radius: number;
}

export interface SessionInfo {
  id: string;
  w: number;
  h: number;
}

export interface SeedCounts {
  fg: number;
  bg: number;
}

export interface SegmentStats {
  outer_iters: number;
  wall_ms: number;
  vertex_count: number;
  K: number;
}

export interface SegmentResult {
  stats: SegmentStats;
  maskPng: Uint8Array;
}

/** Solver overrides mirror the server's config keys; unset = server default. */
export interface ConfigOverrides {
  lambda?: number;
  theta?: number;
  superpixels?: number;
  sigma_xy?: number;
  sigma_l?: number;
  sigma_uv?: number;
  threshold?: number;
  unary_mode?: 'geodesic' | 'gaussian' | 'histogram';
  use_fbs?: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code);
  }
}

export function decodeBase64(data: string): Uint8Array {
  if (typeof atob === 'function') {
    const bin = atob(data);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node (tests) path; kept untyped so the browser build needs no node types.
  const nodeBuffer = (globalThis as Record<string, any>)['Buffer'];
  return new Uint8Array(nodeBuffer.from(data, 'base64'));
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let code = `HTTP${resp.status}`;
  let detail: string | undefined;
  try {
    const body = (await resp.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    detail = body.detail;
  } catch {
    // non-JSON error body; keep the status code
  }
  throw new ApiError(resp.status, code, detail);
}

export class GeosegClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  async createSession(image: Blob): Promise<SessionInfo> {
    const form = new FormData();
    form.append('image', image, 'image.png');
    const resp = await this.fetchImpl(this.url('/sessions'), {
      method: 'POST',
      body: form,
    });
    await raiseForStatus(resp);
    return (await resp.json()) as SessionInfo;
  }

  async sendStrokes(sessionId: string, strokes: Stroke[]): Promise<SeedCounts> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/scribbles`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ strokes }),
    });
    await raiseForStatus(resp);
    return (await resp.json()) as SeedCounts;
  }

  async segment(
    sessionId: string,
    overrides: ConfigOverrides = {},
  ): Promise<SegmentResult> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/segment`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(overrides),
    });
    await raiseForStatus(resp);
    const body = (await resp.json()) as { stats: SegmentStats; mask_png: string };
    return { stats: body.stats, maskPng: decodeBase64(body.mask_png) };
  }

  async deleteSession(sessionId: string): Promise<void> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}`), {
      method: 'DELETE',
    });
    if (resp.status !== 204) await raiseForStatus(resp);
  }
}
