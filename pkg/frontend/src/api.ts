import type {
  AcceptResponse,
  CheckpointPayload,
  Edge,
  RevisionPayload,
  SessionState,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep statusText
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export interface CreateSessionBody {
  dataset: string;
  task?: string;
  target?: string;
  tau?: number;
  config?: Record<string, unknown>;
  hidden_sizes?: number[];
}

/** Thin typed client for the contest service. */
export class ContestClient {
  constructor(private readonly base: string) {}

  async health(): Promise<boolean> {
    try {
      const response = await fetch(`${this.base}/health`);
      return response.ok;
    } catch {
      return false;
    }
  }

  createSession(body: CreateSessionBody): Promise<SessionState> {
    return this.request('/sessions', 'POST', body);
  }

  getSession(id: string): Promise<SessionState> {
    return this.request(`/sessions/${id}`, 'GET');
  }

  revise(id: string, revision: RevisionPayload): Promise<SessionState> {
    return this.request(`/sessions/${id}/revise`, 'POST', revision);
  }

  accept(id: string): Promise<AcceptResponse> {
    return this.request(`/sessions/${id}/accept`, 'POST');
  }

  checkpoint(id: string): Promise<CheckpointPayload> {
    return this.request(`/sessions/${id}/checkpoint`, 'GET');
  }

  extractPreview(id: string, tau: number): Promise<{ tau: number; edges: Edge[] }> {
    return this.request(`/sessions/${id}/extract?tau=${encodeURIComponent(tau)}`, 'GET');
  }

  /** Poll a training session until it leaves the "training" state. */
  async pollUntilReady(
    id: string,
    { intervalMs = 1000, timeoutMs = 300_000 }: { intervalMs?: number; timeoutMs?: number } = {},
  ): Promise<SessionState> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const state = await this.getSession(id);
      if (state.status !== 'training') return state;
      if (Date.now() > deadline) throw new ApiError(408, 'training did not finish in time');
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  private async request<T>(path: string, method: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.base}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return parseOrThrow<T>(response);
  }
}

/** Decode a checkpoint array from base64 little-endian float64 bytes. */
export function decodeFloat64(data: string): Float64Array {
  const binary = typeof atob === 'function' ? atob(data) : Buffer.from(data, 'base64').toString('binary');
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return new Float64Array(bytes.buffer);
}

/**
 * Group norm of the input weights feeding sub-network k from input i:
 * sqrt(sum_j theta1[i, j, k]^2) with theta1 stored row-major (i, j, k).
 */
export function checkpointAdjacencyEntry(ckpt: CheckpointPayload, i: number, k: number): number {
  const spec = ckpt.arrays['theta1'];
  const [nIn, hidden, nSub] = spec.shape;
  if (i >= nIn || k >= nSub) throw new RangeError(`(${i}, ${k}) outside theta1 shape ${spec.shape}`);
  const values = decodeFloat64(spec.data);
  let sum = 0;
  for (let j = 0; j < hidden; j++) {
    const v = values[i * hidden * nSub + j * nSub + k];
    sum += v * v;
  }
  return Math.sqrt(sum);
}
