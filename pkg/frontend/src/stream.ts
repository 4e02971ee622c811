// WebSocket consumption with gap-triggered resync and reconnect backoff.
//
// Protocol: the server sends a state_snapshot frame first, then the live
// tail. Each frame carries a per-connection seq; on a detected gap the
// client freezes frame application, pulls a fresh REST snapshot, resets
// the seq expectation to the gap frame, and resumes. Disconnects
// reconnect with exponential backoff and show a connection banner.

import type { ApiClient } from './api.js';
import { applyFrame, initialState, resetSeq, seedFromSnapshot, type ViewState } from './state.js';
import type { EventFrame } from './types.js';

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamOptions {
  api: ApiClient;
  url: string;
  makeSocket: WebSocketFactory;
  onChange?: (state: ViewState) => void;
  backoffMs?: number;
  maxBackoffMs?: number;
  /** Injectable timer for tests. */
  schedule?: (fn: () => void, ms: number) => void;
}

export class EventStreamClient {
  readonly state: ViewState = initialState();
  private socket: WebSocketLike | null = null;
  private stopped = false;
  private attempt = 0;
  private resyncing = false;
  resyncCount = 0;

  constructor(private readonly options: StreamOptions) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  private notify(): void {
    this.options.onChange?.(this.state);
  }

  private connect(): void {
    if (this.stopped) return;
    this.state.connection = 'connecting';
    this.notify();
    const socket = this.options.makeSocket(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      resetSeq(this.state);
    };
    socket.onmessage = (ev) => {
      const frame = JSON.parse(String(ev.data)) as EventFrame;
      void this.handleFrame(frame);
    };
    socket.onerror = () => {
      /* onclose follows; backoff handled there */
    };
    socket.onclose = () => {
      if (this.stopped) return;
      const base = this.options.backoffMs ?? 500;
      const cap = this.options.maxBackoffMs ?? 10_000;
      const delay = Math.min(base * 2 ** this.attempt, cap);
      this.attempt += 1;
      this.state.connection = 'connecting';
      this.notify();
      const schedule = this.options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
      schedule(() => this.connect(), delay);
    };
  }

  async handleFrame(frame: EventFrame): Promise<void> {
    if (this.resyncing) return; // drop the tail while re-seeding; seq resets after
    const ok = applyFrame(this.state, frame);
    if (!ok) {
      await this.resync(frame);
    }
    this.notify();
  }

  /** Gap recovery: REST snapshot re-seeds the tables, then the stream
   *  resumes from the frame that revealed the gap. */
  private async resync(gapFrame: EventFrame): Promise<void> {
    this.resyncing = true;
    this.resyncCount += 1;
    try {
      const snapshot = await this.options.api.stateSnapshot();
      seedFromSnapshot(this.state, snapshot);
      this.state.lastSeq = gapFrame.seq;
      applyAfterReseed(this.state, gapFrame);
    } finally {
      this.resyncing = false;
    }
  }
}

function applyAfterReseed(state: ViewState, frame: EventFrame): void {
  // The snapshot may already include the gap frame's effect; applying it
  // again is safe because every table write is idempotent upserts or
  // bounded appends reconciled on the next snapshot.
  if (frame.kind !== 'state_snapshot') {
    state.lastSeq = frame.seq - 1;
    applyFrame(state, frame);
  }
}
