// Wire types mirroring the terminal's REST/WebSocket contract.
// The dashboard renders these verbatim; it never recomputes EV, Kelly
// sizes, or any other financial quantity client-side.

export type FrameKind =
  | 'state_snapshot'
  | 'snapshot_batch'
  | 'consensus'
  | 'signal'
  | 'trade'
  | 'pnl_update'
  | 'log_line'
  | 'risk_state';

export interface EventFrame {
  kind: FrameKind;
  payload: unknown;
  event_id: number;
  seq: number;
}

export interface MarketRow {
  market_id: string;
  title: string;
  yes_price: number;
  volume_usdc: number;
  liquidity_usdc: number;
  category: string;
  expiry: number;
  observed_at: number;
}

export interface ConsensusRow {
  market_id: string;
  p_swarm: number;
  std_dev: number;
  n_agents: number;
  p_market: number;
  p_combined: number;
  ev: number;
  side: 'buy_yes' | 'buy_no';
  gated: boolean;
  gate_reason: string | null;
  js?: number;
}

export interface SignalRow {
  kind: 'divergence' | 'negation' | 'partition' | 'latency';
  market_ids: string[];
  magnitude: number;
  direction: string;
  detected_at: number;
}

export interface TradeRow {
  trade_id: string;
  market_id: string;
  side: string;
  size_usdc: number;
  shares: number;
  fill_price: number;
  mode: string;
  provenance: string;
  filled_at: number;
  status: string;
  pnl?: number;
}

export interface PnlView {
  realized_pnl_usdc: number;
  win_rate: number | null;
  open_exposure_usdc: number;
  bankroll_usdc: number;
  win_count: number;
  loss_count: number;
  open_positions: number;
  equity_curve: Array<[number, number]>;
}

export interface Thresholds {
  min_ev: number;
  max_stddev: number;
  weight_swarm: number;
  min_agents: number;
  max_position_usdc: number;
  daily_loss_limit_usdc: number;
  negation_deviation_threshold: number;
  js_priority_threshold: number;
  latency_threshold: number;
}

export interface RiskView {
  paused: boolean;
  suspended: boolean;
  risk: {
    realized_pnl_today_usdc: number;
    suspended: boolean;
    suspended_at: number | null;
    trading_day: string;
  };
  trading_mode: 'paper' | 'live';
  live_armed: boolean;
  thresholds: Thresholds;
  cycle_id: number;
}

export interface AgentPredictionRow {
  persona_id: string;
  market_id: string;
  probability: number;
  confidence: number;
  reasoning: string;
}

export interface StateSnapshot {
  markets: MarketRow[];
  consensus: ConsensusRow[];
  signals: SignalRow[];
  trades: TradeRow[];
  pnl: PnlView;
  risk: RiskView;
  last_event_id: number;
}

export interface LogLine {
  level: string;
  message: string;
  ts: number;
}

export type ControlKind =
  | 'pause'
  | 'resume'
  | 'set_mode'
  | 'arm_live'
  | 'disarm_live'
  | 'set_threshold'
  | 'resume_after_loss_limit'
  | 'resolve_market';

export interface ControlRequest {
  kind: ControlKind;
  args?: Record<string, unknown>;
}
