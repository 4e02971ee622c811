// Browser entry point: wires the stream, tables, charts, and controls to
// the DOM. All state lives in the EventStreamClient's ViewState; the DOM
// is re-rendered from it, never the other way around.

import { ApiClient, wsUrl } from './api.js';
import { drawEquityCurve, drawSwarmStrip } from './charts.js';
import { ControlPanel } from './controls.js';
import { EventStreamClient } from './stream.js';
import type { ViewState } from './state.js';
import type { AgentPredictionRow, ConsensusRow } from './types.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmtPct(x: number | null | undefined): string {
  return x === null || x === undefined ? '-' : `${(x * 100).toFixed(1)}%`;
}

function fmtUsd(x: number | null | undefined): string {
  return x === null || x === undefined ? '-' : x.toFixed(2);
}

export function startApp(): void {
  const baseUrl = (el<HTMLInputElement>('api-url').value || window.location.origin).replace(/\/$/, '');
  const token = el<HTMLInputElement>('api-token').value;
  const api = new ApiClient(baseUrl, token);
  let selectedMarket: string | null = null;
  let agentRows: Record<string, AgentPredictionRow[]> = {};

  const panel = new ControlPanel(api, () => render(stream.state));
  const stream = new EventStreamClient({
    api,
    url: wsUrl(baseUrl, token),
    makeSocket: (url) => new WebSocket(url) as unknown as never,
    onChange: render,
  });

  async function refreshAgents(): Promise<void> {
    try {
      const resp = await fetch(`${baseUrl}/agents`, {
        headers: token ? { Authorization: `Bearer ${token}` } : {},
      });
      if (resp.ok) {
        const body = (await resp.json()) as { latest_predictions: Record<string, AgentPredictionRow[]> };
        agentRows = body.latest_predictions;
      }
    } catch {
      /* agents view is cosmetic; the stream remains authoritative */
    }
  }

  function render(state: ViewState): void {
    el('connection-banner').textContent = state.connection;
    el('connection-banner').className = `banner banner-${state.connection}`;

    const risk = state.risk;
    if (risk) {
      const bits = [
        risk.paused ? 'PAUSED' : 'SCANNING',
        risk.suspended ? 'LOSS-LIMIT SUSPENDED' : null,
        `mode ${risk.trading_mode}${risk.live_armed ? ' (ARMED)' : ''}`,
        `day pnl ${fmtUsd(risk.risk.realized_pnl_today_usdc)}`,
        `cycle ${risk.cycle_id}`,
      ].filter(Boolean);
      el('risk-banner').textContent = bits.join(' | ');
      el('risk-banner').className = risk.suspended
        ? 'banner banner-suspended'
        : risk.paused
          ? 'banner banner-paused'
          : 'banner banner-live';
      el<HTMLInputElement>('threshold-min-ev').placeholder = String(risk.thresholds.min_ev);
      el<HTMLInputElement>('threshold-max-stddev').placeholder = String(risk.thresholds.max_stddev);
    }

    const marketsBody = el('markets-body');
    marketsBody.innerHTML = '';
    const consensusByMarket = state.consensus;
    for (const market of state.markets.values()) {
      const row = document.createElement('tr');
      const c: ConsensusRow | undefined = consensusByMarket.get(market.market_id);
      row.innerHTML = `
        <td>${market.market_id}</td>
        <td class="title">${market.title}</td>
        <td>${fmtPct(market.yes_price)}</td>
        <td>${c ? fmtPct(c.p_swarm) : '-'}</td>
        <td>${c ? fmtPct(c.p_combined) : '-'}</td>
        <td>${c ? fmtPct(c.ev) : '-'}</td>
        <td>${c ? (c.gated ? (c.gate_reason ?? 'gated') : `TRADE ${c.side}`) : '-'}</td>`;
      row.onclick = () => {
        selectedMarket = market.market_id;
        void refreshAgents().then(() => render(state));
      };
      marketsBody.appendChild(row);
    }

    if (state.pnl) {
      el('pnl-realized').textContent = fmtUsd(state.pnl.realized_pnl_usdc);
      el('pnl-bankroll').textContent = fmtUsd(state.pnl.bankroll_usdc);
      el('pnl-exposure').textContent = fmtUsd(state.pnl.open_exposure_usdc);
      el('pnl-winrate').textContent =
        state.pnl.win_rate === null ? '-' : fmtPct(state.pnl.win_rate);
      drawEquityCurve(el<HTMLCanvasElement>('equity-canvas'), state.pnl.equity_curve);
    }

    if (selectedMarket) {
      const c = consensusByMarket.get(selectedMarket);
      el('swarm-title').textContent = `swarm view: ${selectedMarket}`;
      drawSwarmStrip(
        el<HTMLCanvasElement>('swarm-canvas'),
        agentRows[selectedMarket] ?? [],
        c ? c.p_swarm : null,
        c ? c.p_market : null,
      );
    }

    el('signals-body').innerHTML = state.signals
      .slice(-30)
      .reverse()
      .map(
        (s) =>
          `<tr><td>${s.kind}</td><td>${s.market_ids.join(', ')}</td>` +
          `<td>${s.magnitude.toFixed(4)}</td><td>${s.direction}</td></tr>`,
      )
      .join('');

    el('trades-body').innerHTML = state.trades
      .slice(-30)
      .reverse()
      .map(
        (t) =>
          `<tr><td>${t.trade_id}</td><td>${t.market_id}</td><td>${t.side}</td>` +
          `<td>${fmtUsd(t.size_usdc)}</td><td>${fmtPct(t.fill_price)}</td>` +
          `<td>${t.status}</td></tr>`,
      )
      .join('');

    el('log-tail').textContent = state.logs
      .slice(-40)
      .map((line) => `${new Date(line.ts).toISOString()} ${line.level} ${line.message}`)
      .join('\n');

    el('control-error').textContent = panel.lastError ?? '';
    el('arm-confirm').style.display = panel.armPending ? 'inline-block' : 'none';
  }

  el('btn-pause').onclick = () => void panel.pause();
  el('btn-resume').onclick = () => void panel.resume();
  el('btn-mode-paper').onclick = () => void panel.setMode('paper');
  el('btn-mode-live').onclick = () => void panel.setMode('live');
  el('btn-arm').onclick = () => {
    panel.requestArm();
    render(stream.state);
  };
  el('arm-confirm').onclick = () => void panel.confirmArm();
  el('btn-disarm').onclick = () => void panel.disarm();
  el('btn-loss-resume').onclick = () => void panel.resumeAfterLossLimit();
  el('btn-set-min-ev').onclick = () =>
    void panel.setThreshold('min_ev', Number(el<HTMLInputElement>('threshold-min-ev').value));
  el('btn-set-max-stddev').onclick = () =>
    void panel.setThreshold(
      'max_stddev',
      Number(el<HTMLInputElement>('threshold-max-stddev').value),
    );
  el('btn-resolve').onclick = () =>
    void panel.resolveMarket(
      el<HTMLInputElement>('resolve-market-id').value,
      el<HTMLInputElement>('resolve-outcome').value,
    );

  stream.start();
  void refreshAgents();
}

declare global {
  interface Window {
    swarmtraderStart: () => void;
  }
}

if (typeof window !== 'undefined') {
  window.swarmtraderStart = startApp;
}
