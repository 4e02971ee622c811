// Tiny dependency-free canvas renderers. Every number drawn here arrived
// from the server verbatim; these functions only scale pixels.

import type { AgentPredictionRow } from './types.js';

export function drawEquityCurve(
  canvas: HTMLCanvasElement,
  points: Array<[number, number]>,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (points.length === 0) return;
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const pad = 8;
  const px = (x: number) => pad + ((x - xMin) / xSpan) * (width - 2 * pad);
  const py = (y: number) => height - pad - ((y - yMin) / ySpan) * (height - 2 * pad);

  ctx.strokeStyle = '#00e5a0';
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let prevY = py(ys[0]);
  ctx.moveTo(px(xs[0]), prevY);
  for (let i = 1; i < points.length; i++) {
    const x = px(xs[i]);
    ctx.lineTo(x, prevY); // step-after: bankroll changes at fill instants
    prevY = py(ys[i]);
    ctx.lineTo(x, prevY);
  }
  ctx.stroke();

  ctx.fillStyle = 'rgba(255,255,255,0.4)';
  ctx.font = '10px monospace';
  ctx.fillText(yMax.toFixed(2), pad, pad + 8);
  ctx.fillText(yMin.toFixed(2), pad, height - pad);
}

export function drawSwarmStrip(
  canvas: HTMLCanvasElement,
  predictions: AgentPredictionRow[],
  pSwarm: number | null,
  pMarket: number | null,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const pad = 10;
  const px = (p: number) => pad + p * (width - 2 * pad);
  const mid = height / 2;

  ctx.strokeStyle = 'rgba(255,255,255,0.15)';
  ctx.beginPath();
  ctx.moveTo(px(0), mid);
  ctx.lineTo(px(1), mid);
  ctx.stroke();
  ctx.fillStyle = 'rgba(255,255,255,0.35)';
  ctx.font = '9px monospace';
  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    ctx.fillRect(px(tick), mid - 3, 1, 6);
  }

  // One dot per persona, jittered vertically by confidence.
  for (const p of predictions) {
    ctx.fillStyle = 'rgba(88,166,255,0.6)';
    const jitter = (p.confidence - 0.75) * height * 0.6;
    ctx.beginPath();
    ctx.arc(px(p.probability), mid + jitter, 3, 0, Math.PI * 2);
    ctx.fill();
  }
  if (pMarket !== null) {
    ctx.strokeStyle = '#ffc23a';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px(pMarket), pad);
    ctx.lineTo(px(pMarket), height - pad);
    ctx.stroke();
  }
  if (pSwarm !== null) {
    ctx.strokeStyle = '#00e5a0';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px(pSwarm), pad);
    ctx.lineTo(px(pSwarm), height - pad);
    ctx.stroke();
  }
}
