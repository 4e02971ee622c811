import { describe, expect, it } from 'vitest';

import { applyFrame, initialState, seedFromSnapshot } from '../src/state.js';
import type { EventFrame, StateSnapshot } from '../src/types.js';

function frame(kind: EventFrame['kind'], payload: unknown, seq: number, eventId = seq): EventFrame {
  return { kind, payload, seq, event_id: eventId };
}

const EMPTY_SNAPSHOT: StateSnapshot = {
  markets: [],
  consensus: [],
  signals: [],
  trades: [],
  pnl: {
    realized_pnl_usdc: 0,
    win_rate: null,
    open_exposure_usdc: 0,
    bankroll_usdc: 1000,
    win_count: 0,
    loss_count: 0,
    open_positions: 0,
    equity_curve: [[1, 1000]],
  },
  risk: {
    paused: false,
    suspended: false,
    risk: { realized_pnl_today_usdc: 0, suspended: false, suspended_at: null, trading_day: '2026-08-10' },
    trading_mode: 'paper',
    live_armed: false,
    thresholds: {
      min_ev: 0.05,
      max_stddev: 0.3,
      weight_swarm: 0.7,
      min_agents: 5,
      max_position_usdc: 10,
      daily_loss_limit_usdc: 100,
      negation_deviation_threshold: 0.02,
      js_priority_threshold: 0.05,
      latency_threshold: 0.1,
    },
    cycle_id: 0,
  },
  last_event_id: 0,
};

describe('frame reducer', () => {
  it('trade frame appends one row to the trades table', () => {
    const state = initialState();
    seedFromSnapshot(state, EMPTY_SNAPSHOT);
    expect(state.trades).toHaveLength(0);
    const ok = applyFrame(
      state,
      frame('trade', { trade_id: 'T1', market_id: 'm1', side: 'buy_yes', status: 'filled' }, 1),
    );
    expect(ok).toBe(true);
    expect(state.trades).toHaveLength(1);
    expect(state.trades[0].trade_id).toBe('T1');
  });

  it('consensus frames upsert by market id', () => {
    const state = initialState();
    applyFrame(state, frame('consensus', { market_id: 'm1', p_swarm: 0.6 }, 1));
    applyFrame(state, frame('consensus', { market_id: 'm1', p_swarm: 0.7 }, 2));
    expect(state.consensus.size).toBe(1);
    expect(state.consensus.get('m1')?.p_swarm).toBe(0.7);
  });

  it('pnl frames keep the chart series monotone by timestamp', () => {
    const state = initialState();
    applyFrame(
      state,
      frame('pnl_update', { ...EMPTY_SNAPSHOT.pnl, equity_curve: [[1, 1000], [2, 990]] }, 1),
    );
    applyFrame(
      state,
      frame('pnl_update', { ...EMPTY_SNAPSHOT.pnl, equity_curve: [[1, 1000], [2, 990], [3, 1005]] }, 2),
    );
    const xs = state.pnl!.equity_curve.map((p) => p[0]);
    expect(xs).toEqual([...xs].sort((a, b) => a - b));
    expect(state.pnl!.equity_curve).toHaveLength(3);
  });

  it('seq gap {1,2,4} flips needsResync and refuses the frame', () => {
    const state = initialState();
    expect(applyFrame(state, frame('log_line', { message: 'a' }, 1))).toBe(true);
    expect(applyFrame(state, frame('log_line', { message: 'b' }, 2))).toBe(true);
    expect(applyFrame(state, frame('log_line', { message: 'd' }, 4))).toBe(false);
    expect(state.needsResync).toBe(true);
    expect(state.connection).toBe('resyncing');
    expect(state.logs).toHaveLength(2); // the gap frame was not applied
  });

  it('snapshot seeding resets resync state and fills tables', () => {
    const state = initialState();
    state.needsResync = true;
    seedFromSnapshot(state, {
      ...EMPTY_SNAPSHOT,
      markets: [
        {
          market_id: 'm1',
          title: 'q',
          yes_price: 0.5,
          volume_usdc: 1,
          liquidity_usdc: 1,
          category: 'other',
          expiry: 2,
          observed_at: 1,
        },
      ],
      last_event_id: 9,
    });
    expect(state.needsResync).toBe(false);
    expect(state.connection).toBe('live');
    expect(state.markets.size).toBe(1);
    expect(state.lastEventId).toBe(9);
  });

  it('signal and log buffers stay bounded', () => {
    const state = initialState();
    let seq = 0;
    for (let i = 0; i < 350; i++) {
      applyFrame(state, frame('signal', { kind: 'divergence', market_ids: ['m'], magnitude: 0.1, direction: 'buy_yes', detected_at: i }, ++seq));
    }
    expect(state.signals.length).toBeLessThanOrEqual(200);
    for (let i = 0; i < 400; i++) {
      applyFrame(state, frame('log_line', { level: 'info', message: String(i), ts: i }, ++seq));
    }
    expect(state.logs.length).toBeLessThanOrEqual(300);
  });
});
