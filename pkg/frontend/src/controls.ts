// Operator steering: client-side validation mirror, optimistic pending
// state, and the two-step live-arm confirmation.
//
// Invalid values (a negative threshold, a malformed resolution) never
// leave the browser; valid commands POST to /control, render as pending,
// and reconcile against the authoritative risk view in the response (or
// the next risk_state frame). Arming live trading is deliberately
// awkward: set_mode(live) first, then a separate arm request that must be
// confirmed before anything is sent.

import { ApiError, type ApiClient } from './api.js';
import type { ControlKind, RiskView } from './types.js';

export interface ControlResult {
  ok: boolean;
  error?: string;
  risk?: RiskView;
}

export const NUMERIC_THRESHOLDS = [
  'min_ev',
  'max_stddev',
  'weight_swarm',
  'min_agents',
  'min_volume_usdc',
  'min_liquidity_usdc',
  'max_position_usdc',
  'daily_loss_limit_usdc',
  'negation_deviation_threshold',
  'js_priority_threshold',
  'latency_threshold',
  'agents_per_market',
] as const;

export type ThresholdName = (typeof NUMERIC_THRESHOLDS)[number];

/** Mirror of the server's validation rules, so obviously-bad input gets
 *  an inline error without a request. The server remains authoritative. */
export function validateThreshold(name: string, value: number): string | null {
  if (!(NUMERIC_THRESHOLDS as readonly string[]).includes(name)) {
    return `unknown threshold: ${name}`;
  }
  if (!Number.isFinite(value)) return 'value must be a number';
  if (value < 0) return `${name} must be >= 0`;
  if (name === 'max_stddev' && value > 0.5) return 'max_stddev above 0.5 is meaningless for probabilities';
  if (name === 'weight_swarm' && value > 1) return 'weight_swarm must lie in [0, 1]';
  if ((name === 'min_agents' || name === 'agents_per_market') && !Number.isInteger(value)) {
    return `${name} must be an integer`;
  }
  if ((name === 'max_position_usdc' || name === 'daily_loss_limit_usdc') && value === 0) {
    return `${name} must be > 0`;
  }
  return null;
}

export function validateResolution(marketId: string, outcome: string): string | null {
  if (!marketId.trim()) return 'market id is required';
  if (outcome !== 'yes' && outcome !== 'no') return 'outcome must be yes or no';
  return null;
}

export class ControlPanel {
  pending = 0;
  lastError: string | null = null;
  /** Two-step arming: a pending arm request awaiting confirmation. */
  armPending = false;

  constructor(
    private readonly api: ApiClient,
    private readonly onRisk?: (risk: RiskView) => void,
  ) {}

  private async dispatch(kind: ControlKind, args?: Record<string, unknown>): Promise<ControlResult> {
    this.pending += 1;
    this.lastError = null;
    try {
      const risk = await this.api.control({ kind, args });
      this.onRisk?.(risk);
      return { ok: true, risk };
    } catch (err) {
      // 400/401 surface inline, verbatim; no state change.
      this.lastError = err instanceof ApiError ? err.detail : String(err);
      return { ok: false, error: this.lastError };
    } finally {
      this.pending -= 1;
    }
  }

  pause(): Promise<ControlResult> {
    return this.dispatch('pause');
  }

  resume(): Promise<ControlResult> {
    return this.dispatch('resume');
  }

  setMode(mode: 'paper' | 'live'): Promise<ControlResult> {
    this.armPending = false; // mode changes reset any half-finished arm flow
    return this.dispatch('set_mode', { mode });
  }

  /** Step one of arming: nothing is sent yet. */
  requestArm(): void {
    this.armPending = true;
  }

  cancelArm(): void {
    this.armPending = false;
  }

  /** Step two: only a confirmed request reaches the server. */
  async confirmArm(): Promise<ControlResult> {
    if (!this.armPending) {
      return { ok: false, error: 'arm not requested; click arm first' };
    }
    this.armPending = false;
    return this.dispatch('arm_live');
  }

  disarm(): Promise<ControlResult> {
    return this.dispatch('disarm_live');
  }

  async setThreshold(name: string, value: number): Promise<ControlResult> {
    const problem = validateThreshold(name, value);
    if (problem) {
      this.lastError = problem;
      return { ok: false, error: problem };
    }
    return this.dispatch('set_threshold', { name, value });
  }

  resumeAfterLossLimit(): Promise<ControlResult> {
    return this.dispatch('resume_after_loss_limit');
  }

  async resolveMarket(marketId: string, outcome: string): Promise<ControlResult> {
    const problem = validateResolution(marketId, outcome);
    if (problem) {
      this.lastError = problem;
      return { ok: false, error: problem };
    }
    return this.dispatch('resolve_market', { market_id: marketId, outcome });
  }
}
