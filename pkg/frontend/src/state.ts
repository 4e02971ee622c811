// View state and the frame reducer.
//
// The dashboard is stateless with respect to truth: everything here is
// rebuilt from a REST state snapshot plus the ordered frame tail, so a
// full page reload reconstructs an identical view. Frames must arrive
// with contiguous per-connection seq numbers; a gap flips needsResync
// and the stream client re-seeds from REST.

import type {
  ConsensusRow,
  EventFrame,
  LogLine,
  MarketRow,
  PnlView,
  RiskView,
  SignalRow,
  StateSnapshot,
  TradeRow,
} from './types.js';

export type ConnectionState = 'connecting' | 'live' | 'resyncing';

export interface ViewState {
  connection: ConnectionState;
  markets: Map<string, MarketRow>;
  consensus: Map<string, ConsensusRow>;
  signals: SignalRow[];
  trades: TradeRow[];
  pnl: PnlView | null;
  risk: RiskView | null;
  logs: LogLine[];
  lastSeq: number;
  lastEventId: number;
  needsResync: boolean;
  pendingControls: number;
}

export const MAX_SIGNALS = 200;
export const MAX_TRADES = 500;
export const MAX_LOGS = 300;

export function initialState(): ViewState {
  return {
    connection: 'connecting',
    markets: new Map(),
    consensus: new Map(),
    signals: [],
    trades: [],
    pnl: null,
    risk: null,
    logs: [],
    lastSeq: 0,
    lastEventId: 0,
    needsResync: false,
    pendingControls: 0,
  };
}

export function seedFromSnapshot(state: ViewState, snapshot: StateSnapshot): ViewState {
  state.markets = new Map(snapshot.markets.map((m) => [m.market_id, m]));
  state.consensus = new Map(snapshot.consensus.map((c) => [c.market_id, c]));
  state.signals = snapshot.signals.slice(-MAX_SIGNALS);
  state.trades = snapshot.trades.slice(-MAX_TRADES);
  state.pnl = snapshot.pnl;
  state.risk = snapshot.risk;
  state.lastEventId = snapshot.last_event_id;
  state.needsResync = false;
  state.connection = 'live';
  return state;
}

/** Apply one frame. Returns false when a seq gap was detected; the
 *  caller must resync from REST before applying further frames. */
export function applyFrame(state: ViewState, frame: EventFrame): boolean {
  if (state.lastSeq !== 0 && frame.seq !== state.lastSeq + 1) {
    state.needsResync = true;
    state.connection = 'resyncing';
    return false;
  }
  state.lastSeq = frame.seq;
  if (frame.event_id > state.lastEventId) {
    state.lastEventId = frame.event_id;
  }
  switch (frame.kind) {
    case 'state_snapshot':
      seedFromSnapshot(state, frame.payload as StateSnapshot);
      break;
    case 'snapshot_batch': {
      const batch = frame.payload as { markets: MarketRow[] };
      for (const m of batch.markets) state.markets.set(m.market_id, m);
      break;
    }
    case 'consensus': {
      const row = frame.payload as ConsensusRow;
      state.consensus.set(row.market_id, row);
      break;
    }
    case 'signal':
      state.signals.push(frame.payload as SignalRow);
      if (state.signals.length > MAX_SIGNALS) state.signals.shift();
      break;
    case 'trade':
      state.trades.push(frame.payload as TradeRow);
      if (state.trades.length > MAX_TRADES) state.trades.shift();
      break;
    case 'pnl_update': {
      const pnl = frame.payload as PnlView;
      // Chart series appends monotonically by timestamp; the payload is
      // authoritative, so replacing wholesale preserves that property.
      state.pnl = pnl;
      break;
    }
    case 'risk_state':
      state.risk = frame.payload as RiskView;
      break;
    case 'log_line':
      state.logs.push(frame.payload as LogLine);
      if (state.logs.length > MAX_LOGS) state.logs.shift();
      break;
  }
  return true;
}

export function resetSeq(state: ViewState): void {
  state.lastSeq = 0;
}
