// REST client for the terminal. The operator token lives in memory only.

import type { ControlRequest, RiskView, StateSnapshot } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private token: string = '',
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private headers(json = false): Record<string, string> {
    const headers: Record<string, string> = {};
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    if (json) headers['Content-Type'] = 'application/json';
    return headers;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, { headers: this.headers() });
    if (!resp.ok) throw new ApiError(resp.status, await describeError(resp));
    return (await resp.json()) as T;
  }

  stateSnapshot(): Promise<StateSnapshot> {
    return this.get<StateSnapshot>('/state');
  }

  risk(): Promise<RiskView> {
    return this.get<RiskView>('/risk');
  }

  /** POST /control; resolves to the authoritative post-apply risk view. */
  async control(request: ControlRequest): Promise<RiskView> {
    const resp = await this.fetchImpl(`${this.baseUrl}/control`, {
      method: 'POST',
      headers: this.headers(true),
      body: JSON.stringify(request),
    });
    if (!resp.ok) throw new ApiError(resp.status, await describeError(resp));
    return (await resp.json()) as RiskView;
  }
}

async function describeError(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    return body.detail ?? resp.statusText;
  } catch {
    return resp.statusText;
  }
}

export function wsUrl(baseUrl: string, token: string): string {
  const ws = baseUrl.replace(/^http/, 'ws');
  return token ? `${ws}/ws?token=${encodeURIComponent(token)}` : `${ws}/ws`;
}
