"""The terminal: wiring, control commands, and the periodic scan loop.

Each cycle runs fetch -> filter -> swarm evaluate -> aggregate -> gate ->
divergence / cross-market / latency analysis -> size -> execute ->
persist -> broadcast. Cycles are fixed-rate: the next cycle starts at
max(previous start + interval, previous end), so an overrun never queues
a backlog. Control commands mutate terminal state the moment they are
applied, but the loop reads one consistent snapshot of that state at
each cycle boundary, so no cycle observes a half-applied command.

With a fixture source, the seeded simulated provider, and virtual time,
entire runs are byte-reproducible: trade logs and cycle reports hash
identically across runs.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from .aggregation import GateConfig, Side, SwarmConsensus, consensus_to_record, evaluate_candidate
from .analysis import (
    ArbitrageSignal,
    PartitionGroup,
    SignalDirection,
    SignalKind,
    check_partition,
    divergence_signal,
    find_negation_pairs,
    negation_signals,
    score_market,
)
from .config import AppConfig
from .domain import MarketSnapshot, Probability, net_odds_from_price
from .errors import (
    ConfigError,
    SourceUnavailable,
    SwarmEmptyError,
    SwarmTraderError,
    ValidationError,
)
from .events import EventHub
from .execution import Executor, Ledger, OrderRequest, Provenance, Trade, replay_ledger
from .latency import QuoteSource, cex_implied_probability, latency_signal, load_strike_map, realized_volatility
from .marketdata import MarketFeed, MarketFilter, MarketSource, filter_markets
from .persistence import Store, validate_probability_fields
from .risk import RiskConfig, RiskManager
from .swarm import (
    PredictionCache,
    SimulatedProvider,
    SwarmEngine,
    load_persona_pool,
    sample_personas,
)
from .swarm.providers import RemoteHttpProvider
from .timesource import RealTime, TimeSource, VirtualTime

logger = logging.getLogger(__name__)

THRESHOLD_COMMANDS = {
    "min_ev",
    "max_stddev",
    "weight_swarm",
    "min_agents",
    "min_volume_usdc",
    "min_liquidity_usdc",
    "max_position_usdc",
    "daily_loss_limit_usdc",
    "negation_deviation_threshold",
    "js_priority_threshold",
    "latency_threshold",
    "agents_per_market",
}

COMMAND_KINDS = (
    "pause",
    "resume",
    "set_mode",
    "arm_live",
    "disarm_live",
    "set_threshold",
    "resume_after_loss_limit",
    "resolve_market",
)


@dataclass(frozen=True, slots=True)
class ControlCommand:
    kind: str
    issued_by: str
    issued_at: int
    args: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"kind": self.kind, "issued_by": self.issued_by, "ts": self.issued_at, "args": self.args}


@dataclass(frozen=True, slots=True)
class ScanCycleReport:
    cycle_id: int
    started_at: int
    markets_fetched: int
    markets_filtered: int
    markets_evaluated: int
    signals_emitted: int
    trades_executed: int
    duration_ms: int
    provider_calls: int
    cache_hits: int

    def to_record(self) -> dict:
        return {
            "cycle_id": self.cycle_id,
            "ts": self.started_at,
            "markets_fetched": self.markets_fetched,
            "markets_filtered": self.markets_filtered,
            "markets_evaluated": self.markets_evaluated,
            "signals_emitted": self.signals_emitted,
            "trades_executed": self.trades_executed,
            "duration_ms": self.duration_ms,
            "provider_calls": self.provider_calls,
            "cache_hits": self.cache_hits,
        }


def _cohort_seed(master_seed: int, cycle_id: int, market_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}|{cycle_id}|{market_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_provider(config: AppConfig):
    if config.provider == "simulated":
        return SimulatedProvider(
            seed=config.sim_seed,
            noise_sigma=config.sim_noise_sigma,
            bias=config.sim_bias,
            latency_s=config.sim_latency_secs,
            max_in_flight=config.max_in_flight,
        )
    if config.provider.startswith("remote:"):
        name = config.provider.split(":", 1)[1]
        return RemoteHttpProvider.from_env(name, max_in_flight=config.max_in_flight)
    raise ConfigError(f"unknown provider: {config.provider!r} (use 'simulated' or 'remote:<name>')")


def build_market_source(config: AppConfig) -> MarketSource:
    src = config.market_source
    if not src:
        raise ConfigError("MARKET_SOURCE is required (URL or fixture path)")
    if src.startswith("http://") or src.startswith("https://"):
        return MarketSource("http_api", src, price_basis=config.price_basis)
    return MarketSource("fixture_file", src, price_basis=config.price_basis)


class Terminal:
    """Owns every subsystem; the single place state mutations funnel through."""

    def __init__(
        self,
        config: AppConfig,
        time_source: TimeSource | None = None,
        provider=None,
        feed: MarketFeed | None = None,
        quote_source: QuoteSource | None = None,
    ):
        self.config = config
        self.ts: TimeSource = time_source or (VirtualTime() if config.virtual_time else RealTime())
        now = self.ts.now_ms()

        self.store = Store(config.data_dir, fsync=config.fsync)
        self.hub = EventHub(buffer_frames=config.ws_buffer_frames)
        self.pool = load_persona_pool(config.persona_pool_path or None)
        self.provider = provider if provider is not None else build_provider(config)
        self.cache = PredictionCache(config.cache_ttl_secs, clock=self.ts.now_ms)
        self.engine = SwarmEngine(
            self.provider,
            self.cache,
            clock=self.ts.now_ms,
            wall_timer=None if self.ts.is_virtual else self.ts.monotonic,
        )
        self.feed = feed if feed is not None else MarketFeed(
            build_market_source(config), clock=self.ts.now_ms
        )
        self.risk = RiskManager(
            RiskConfig(
                kelly_multiplier=config.kelly_fraction,
                max_position_usdc=config.max_position_usdc,
                daily_loss_limit_usdc=config.daily_loss_limit_usdc,
                bankroll_usdc=config.bankroll_usdc,
            ),
            now,
        )
        self.ledger = Ledger(config.bankroll_usdc, now)
        self.executor = Executor(
            self.ledger,
            store=self.store,
            max_position_usdc=config.max_position_usdc,
            fee_bps=config.fee_bps,
            slippage_bps=config.slippage_bps,
        )
        self.executor.live_enabled = config.trading_mode == "live"

        self.quote_source = quote_source
        if self.quote_source is None and (config.cex_quote_url or config.cex_replay_path):
            if config.cex_replay_path:
                self.quote_source = QuoteSource(
                    "fixture_file", replay_path=config.cex_replay_path, clock=self.ts.now_ms
                )
            else:
                self.quote_source = QuoteSource(
                    "http_api", url_template=config.cex_quote_url, clock=self.ts.now_ms
                )
        self.strike_map = load_strike_map(config.strike_map_path) if config.strike_map_path else {}
        self.partition_groups = (
            load_partition_groups(config.partition_groups_path)
            if config.partition_groups_path
            else []
        )
        self._price_history: dict[str, list[tuple[int, float]]] = {}
        self._latency_p_cex: dict[str, float] = {}

        self.paused = False
        self.cycle_id = 0
        self.reports: list[ScanCycleReport] = []
        self.latest_snapshots: dict[str, MarketSnapshot] = {}
        self.latest_consensus: dict[str, SwarmConsensus] = {}
        self.latest_predictions: dict[str, list[dict]] = {}
        self.recent_signals: list[ArbitrageSignal] = []
        self.recent_trades: list[Trade] = []
        self._command_lock = asyncio.Lock()
        self._stop = asyncio.Event()

    # ------------------------------------------------------------------
    # control plane
    # ------------------------------------------------------------------

    def validate_command(self, kind: str, args: dict) -> None:
        if kind not in COMMAND_KINDS:
            raise ValidationError(f"unknown command kind: {kind}")
        if kind == "set_mode":
            if args.get("mode") not in ("paper", "live"):
                raise ValidationError("set_mode requires mode of paper or live")
        elif kind == "arm_live":
            if self.config.trading_mode != "live":
                raise ValidationError("arm_live requires set_mode(live) first")
        elif kind == "set_threshold":
            name = args.get("name")
            if name not in THRESHOLD_COMMANDS:
                raise ValidationError(f"unknown threshold: {name}")
            try:
                value = float(args["value"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"set_threshold needs a numeric value: {exc}") from exc
            # Re-validate the whole config with the candidate value applied.
            candidate = {name: int(value) if name in ("min_agents", "agents_per_market") else value}
            try:
                replace(self.config, **candidate).validate()
            except ConfigError as exc:
                raise ValidationError(str(exc)) from exc
            if name in ("min_ev", "negation_deviation_threshold", "js_priority_threshold", "latency_threshold", "max_stddev") and value < 0:
                raise ValidationError(f"{name} must be >= 0")
        elif kind == "resolve_market":
            if not args.get("market_id"):
                raise ValidationError("resolve_market requires market_id")
            if args.get("outcome") not in ("yes", "no"):
                raise ValidationError("resolve_market requires outcome of yes or no")

    async def submit_command(self, command: ControlCommand) -> dict:
        """Validate, persist, apply; returns the post-apply state view."""
        self.validate_command(command.kind, command.args)
        async with self._command_lock:
            self.store.append("commands", command.to_record())
            self._apply_command(command)
        state = self.risk_view()
        self.hub.publish("risk_state", state)
        return state

    def _apply_command(self, command: ControlCommand) -> None:
        kind, args, now = command.kind, command.args, command.issued_at
        if kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "set_mode":
            mode = args["mode"]
            self.config = replace(self.config, trading_mode=mode)
            self.executor.live_enabled = mode == "live"
            if mode == "paper":
                self.executor.live_armed = False
        elif kind == "arm_live":
            self.executor.live_armed = True
        elif kind == "disarm_live":
            self.executor.live_armed = False
        elif kind == "set_threshold":
            name, value = args["name"], float(args["value"])
            if name in ("min_agents", "agents_per_market"):
                value = int(value)
            self.config = replace(self.config, **{name: value}).validate()
            self.risk.config = replace(
                self.risk.config,
                max_position_usdc=self.config.max_position_usdc,
                daily_loss_limit_usdc=self.config.daily_loss_limit_usdc,
                kelly_multiplier=self.config.kelly_fraction,
            )
            self.executor.max_position_usdc = self.config.max_position_usdc
        elif kind == "resume_after_loss_limit":
            self.risk.resume(command.issued_by, now)
        elif kind == "resolve_market":
            self._resolve_market(args["market_id"], args["outcome"], now)
        logger.info("applied control command %s %s from %s", kind, args, command.issued_by)

    def _resolve_market(self, market_id: str, outcome: str, now: int) -> None:
        settled = self.executor.resolve_market(market_id, outcome, now)
        for trade, pnl in settled:
            self.risk.on_realized_pnl(pnl, now)
            self.hub.publish("trade", {**trade.to_record(), "pnl": pnl})
        if settled:
            self.hub.publish("pnl_update", self.pnl_view())
            self.store.append(
                "risk_days",
                {**self.risk.state.to_record(), "ts": now},
            )

    # ------------------------------------------------------------------
    # state views (REST payloads)
    # ------------------------------------------------------------------

    def risk_view(self) -> dict:
        return {
            "paused": self.paused,
            "suspended": self.risk.state.suspended,
            "risk": self.risk.state.to_record(),
            "trading_mode": self.config.trading_mode,
            "live_armed": self.executor.live_armed,
            "thresholds": {
                "min_ev": self.config.min_ev,
                "max_stddev": self.config.max_stddev,
                "weight_swarm": self.config.weight_swarm,
                "min_agents": self.config.min_agents,
                "max_position_usdc": self.config.max_position_usdc,
                "daily_loss_limit_usdc": self.config.daily_loss_limit_usdc,
                "negation_deviation_threshold": self.config.negation_deviation_threshold,
                "js_priority_threshold": self.config.js_priority_threshold,
                "latency_threshold": self.config.latency_threshold,
            },
            "cycle_id": self.cycle_id,
        }

    def markets_view(self) -> list[dict]:
        return [
            {
                "market_id": m.market_id,
                "title": m.title,
                "yes_price": float(m.yes_price),
                "volume_usdc": m.volume_usdc,
                "liquidity_usdc": m.liquidity_usdc,
                "category": m.category.value,
                "expiry": m.expiry,
                "observed_at": m.observed_at,
            }
            for m in self.latest_snapshots.values()
        ]

    def consensus_view(self) -> list[dict]:
        return [consensus_to_record(c) for c in self.latest_consensus.values()]

    def signals_view(self) -> list[dict]:
        return [s.to_record() for s in self.recent_signals[-200:]]

    def trades_view(self) -> list[dict]:
        return [t.to_record() for t in self.recent_trades[-500:]]

    def pnl_view(self) -> dict:
        summary = self.ledger.summary()
        view = summary.to_record()
        view["equity_curve"] = [list(point) for point in summary.equity_curve[-1000:]]
        return view

    def agents_view(self) -> dict:
        return {
            "personas": [
                {
                    "persona_id": p.persona_id,
                    "archetype": p.archetype.value,
                    "display_name": p.display_name,
                }
                for p in self.pool
            ],
            "latest_predictions": self.latest_predictions,
        }

    def state_snapshot(self) -> dict:
        return {
            "markets": self.markets_view(),
            "consensus": self.consensus_view(),
            "signals": self.signals_view(),
            "trades": self.trades_view(),
            "pnl": self.pnl_view(),
            "risk": self.risk_view(),
            "last_event_id": self.hub.last_event_id,
        }

    # ------------------------------------------------------------------
    # scan cycle
    # ------------------------------------------------------------------

    async def run_cycle(self) -> ScanCycleReport:
        self.cycle_id += 1
        cycle_id = self.cycle_id
        # One consistent config snapshot per cycle: AppConfig is frozen, so
        # a local reference isolates the cycle from mid-flight commands.
        cfg = self.config
        started_at = self.ts.now_ms()
        started_mono = self.ts.monotonic()
        calls_before = self.engine.stats.provider_calls
        hits_before = self.engine.stats.cache_hits
        self.risk.tick(started_at)

        fetched: list[MarketSnapshot] = []
        try:
            fetched = await self.feed.fetch_active_markets()
        except SourceUnavailable as exc:
            logger.warning("cycle %d: market source unavailable: %s", cycle_id, exc)
            self.hub.publish("log_line", {"level": "warning", "message": str(exc), "ts": started_at})

        market_filter = MarketFilter(
            min_volume_usdc=cfg.min_volume_usdc,
            min_liquidity_usdc=cfg.min_liquidity_usdc,
        )
        filtered = filter_markets([m for m in fetched if m.tradable], market_filter)
        ranked = sorted(filtered, key=lambda m: (-m.volume_usdc, m.market_id))
        selected = ranked[: cfg.max_markets_per_cycle]

        for snap in fetched:
            self.latest_snapshots[snap.market_id] = snap
        snapshot_batch = {m.market_id: m for m in filtered}
        for snap in filtered:
            self.store.append(
                "snapshots",
                {
                    "market_id": snap.market_id,
                    "title": snap.title,
                    "yes_price": float(snap.yes_price),
                    "volume_usdc": snap.volume_usdc,
                    "liquidity_usdc": snap.liquidity_usdc,
                    "category": snap.category.value,
                    "expiry": snap.expiry,
                    "ts": started_at,
                    "cycle_id": cycle_id,
                },
                validate=validate_probability_fields,
            )
        self.hub.publish(
            "snapshot_batch",
            {"cycle_id": cycle_id, "ts": started_at, "markets": self.markets_view()},
        )

        signals: list[ArbitrageSignal] = []
        evaluated = 0
        trades_executed = 0

        trading_active = not self.paused and not self.risk.suspended
        if trading_active and selected:
            evaluated, cycle_signals, trades_executed = await self._evaluate_and_trade(
                cycle_id, started_at, selected, snapshot_batch, cfg
            )
            signals.extend(cycle_signals)
        elif selected:
            logger.info(
                "cycle %d: evaluation skipped (paused=%s suspended=%s)",
                cycle_id,
                self.paused,
                self.risk.suspended,
            )

        duration_ms = int((self.ts.monotonic() - started_mono) * 1000)
        report = ScanCycleReport(
            cycle_id=cycle_id,
            started_at=started_at,
            markets_fetched=len(fetched),
            markets_filtered=len(filtered),
            markets_evaluated=evaluated,
            signals_emitted=len(signals),
            trades_executed=trades_executed,
            duration_ms=duration_ms,
            provider_calls=self.engine.stats.provider_calls - calls_before,
            cache_hits=self.engine.stats.cache_hits - hits_before,
        )
        self.reports.append(report)
        self.store.append("cycles", report.to_record())
        self.hub.publish("pnl_update", self.pnl_view())
        self.hub.publish(
            "log_line",
            {
                "level": "info",
                "message": (
                    f"cycle {cycle_id}: fetched={report.markets_fetched} "
                    f"filtered={report.markets_filtered} evaluated={report.markets_evaluated} "
                    f"signals={report.signals_emitted} trades={report.trades_executed}"
                ),
                "ts": started_at,
            },
        )
        return report

    async def _evaluate_and_trade(
        self,
        cycle_id: int,
        now: int,
        selected: list[MarketSnapshot],
        snapshot_batch: dict[str, MarketSnapshot],
        cfg: AppConfig,
    ) -> tuple[int, list[ArbitrageSignal], int]:
        gate_config = GateConfig(
            min_ev=cfg.min_ev,
            max_std_dev=cfg.max_stddev,
            weight_swarm=cfg.weight_swarm,
            min_agents=cfg.min_agents,
        )

        async def evaluate(market: MarketSnapshot):
            cohort = sample_personas(
                self.pool,
                min(cfg.agents_per_market, len(self.pool)),
                _cohort_seed(cfg.sim_seed, cycle_id, market.market_id),
            )
            try:
                predictions = await self.engine.evaluate_market(market, cohort)
            except (SwarmEmptyError, SwarmTraderError) as exc:
                logger.warning("cycle %d: market %s skipped: %s", cycle_id, market.market_id, exc)
                return market, None, None
            consensus = evaluate_candidate(
                market.market_id, predictions, market.yes_price, gate_config
            )
            return market, predictions, consensus

        results = await asyncio.gather(*(evaluate(m) for m in selected))

        signals: list[ArbitrageSignal] = []
        candidates: list[tuple[float, MarketSnapshot, SwarmConsensus]] = []
        evaluated = 0
        for market, predictions, consensus in results:
            if consensus is None:
                continue
            evaluated += 1
            self.latest_predictions[market.market_id] = [p.to_record() for p in predictions]
            for p in predictions:
                self.store.append(
                    "predictions",
                    {**p.to_record(), "ts": now, "cycle_id": cycle_id},
                    validate=validate_probability_fields,
                )
            report = score_market(
                float(consensus.p_swarm), float(market.yes_price), market.market_id
            )
            self.store.append(
                "consensus",
                {
                    **consensus_to_record(consensus),
                    "js": report.js,
                    "kl_swarm_vs_market": _json_safe(report.kl_swarm_vs_market),
                    "kl_market_vs_swarm": _json_safe(report.kl_market_vs_swarm),
                    "ts": now,
                    "cycle_id": cycle_id,
                },
                validate=validate_probability_fields,
            )
            self.latest_consensus[market.market_id] = consensus
            self.hub.publish(
                "consensus",
                {**consensus_to_record(consensus), "js": report.js, "cycle_id": cycle_id},
            )
            sig = divergence_signal(
                report,
                float(consensus.p_swarm),
                float(market.yes_price),
                now,
                cfg.js_priority_threshold,
            )
            if sig is not None:
                signals.append(sig)
            candidates.append((report.js, market, consensus))

        # Cross-market scans run on the full filtered batch, one pass.
        batch = list(snapshot_batch.values())
        pairs = find_negation_pairs(batch)
        signals.extend(negation_signals(pairs, now, cfg.negation_deviation_threshold))
        for group in self.partition_groups:
            sig = check_partition(group, batch, now, cfg.negation_deviation_threshold)
            if sig is not None:
                signals.append(sig)
        signals.extend(await self._latency_signals(now, snapshot_batch, cfg))

        for sig in signals:
            self.recent_signals.append(sig)
            self.store.append("signals", sig.to_record())
            self.hub.publish("signal", sig.to_record())

        trades = 0
        # Divergence-priority ordering: high-JS candidates trade first.
        candidates.sort(key=lambda item: (-item[0], item[1].market_id))
        for _, market, consensus in candidates:
            if consensus.gated or self.risk.suspended:
                continue
            trades += self._execute_swarm_trade(cycle_id, now, market, consensus, snapshot_batch, cfg)
        for sig in signals:
            if self.risk.suspended:
                break
            if sig.kind in (SignalKind.NEGATION, SignalKind.PARTITION):
                trades += self._execute_paired_trade(cycle_id, now, sig, snapshot_batch, cfg)
            elif sig.kind is SignalKind.LATENCY:
                trades += self._execute_latency_trade(cycle_id, now, sig, snapshot_batch, cfg)
        return evaluated, signals, trades

    async def _latency_signals(
        self, now: int, snapshot_batch: dict[str, MarketSnapshot], cfg: AppConfig
    ) -> list[ArbitrageSignal]:
        if not self.strike_map or self.quote_source is None:
            return []
        out: list[ArbitrageSignal] = []
        for market_id, contract in sorted(self.strike_map.items()):
            snap = snapshot_batch.get(market_id)
            if snap is None or contract.expiry <= now:
                continue
            try:
                quote = await self.quote_source.poll(contract.symbol)
            except (SourceUnavailable, SwarmTraderError) as exc:
                logger.warning("quote poll failed for %s: %s", contract.symbol, exc)
                continue
            history = self._price_history.setdefault(contract.symbol, [])
            if not history or history[-1][0] < quote.observed_at:
                history.append((quote.observed_at, quote.spot))
            del history[: max(0, len(history) - 10_000)]
            try:
                vol = realized_volatility(history, cfg.vol_window_hours, contract.symbol)
                p_cex = cex_implied_probability(quote, contract, vol, now)
            except SwarmTraderError as exc:
                logger.debug("latency model unavailable for %s: %s", market_id, exc)
                continue
            sig = latency_signal(
                float(p_cex), float(snap.yes_price), cfg.latency_threshold, market_id, now
            )
            if sig is not None:
                self._latency_p_cex[market_id] = float(p_cex)
                out.append(sig)
        return out

    def _order_size(self, p: float, price: float) -> float:
        try:
            b = net_odds_from_price(price)
        except SwarmTraderError:
            return 0.0
        return self.risk.size_order(Probability(p), b)

    def _place(self, order: OrderRequest, now: int, snapshot_batch: dict[str, MarketSnapshot]) -> int:
        try:
            if order.mode == "paper":
                trade = self.executor.paper_fill(order, snapshot_batch, now)
            else:
                trade = self.executor.live_submit(order, now)
        except SwarmTraderError as exc:
            logger.warning("order for %s failed: %s", order.market_id, exc)
            return 0
        self.recent_trades.append(trade)
        del self.recent_trades[: max(0, len(self.recent_trades) - 1000)]
        self.hub.publish("trade", trade.to_record())
        return 1 if trade.status.value == "filled" else 0

    def _execute_swarm_trade(
        self,
        cycle_id: int,
        now: int,
        market: MarketSnapshot,
        consensus: SwarmConsensus,
        snapshot_batch: dict[str, MarketSnapshot],
        cfg: AppConfig,
    ) -> int:
        if consensus.side is Side.BUY_YES:
            p, price = float(consensus.p_combined), float(market.yes_price)
        else:
            p, price = 1.0 - float(consensus.p_combined), float(market.no_price())
        size = self._order_size(p, price)
        if size <= 0:
            return 0
        order = OrderRequest(
            market_id=market.market_id,
            side=consensus.side,
            size_usdc=size,
            limit_price=Probability(price),
            mode=cfg.trading_mode,
            provenance=Provenance.SWARM,
            idempotency_key=f"{market.market_id}|{cycle_id}|{consensus.side.value}",
        )
        return self._place(order, now, snapshot_batch)

    def _execute_paired_trade(
        self,
        cycle_id: int,
        now: int,
        sig: ArbitrageSignal,
        snapshot_batch: dict[str, MarketSnapshot],
        cfg: AppConfig,
    ) -> int:
        legs = [snapshot_batch.get(mid) for mid in sig.market_ids]
        if any(leg is None for leg in legs):
            return 0
        p_sum = sum(float(leg.yes_price) for leg in legs)  # type: ignore[union-attr]
        buy_yes = p_sum < 1.0
        cost_per_set = p_sum if buy_yes else len(legs) - p_sum
        if cost_per_set <= 0:
            return 0
        budget = min(
            self.risk.config.kelly_multiplier * self.risk.config.bankroll_usdc,
            self.risk.config.max_position_usdc,
        )
        shares = budget / cost_per_set
        placed = 0
        for leg in legs:
            price = float(leg.yes_price) if buy_yes else float(leg.no_price())  # type: ignore[union-attr]
            size = shares * price
            if size <= 1e-9:
                continue
            order = OrderRequest(
                market_id=leg.market_id,  # type: ignore[union-attr]
                side=Side.BUY_YES if buy_yes else Side.BUY_NO,
                size_usdc=min(size, self.risk.config.max_position_usdc),
                limit_price=Probability(price),
                mode=cfg.trading_mode,
                provenance=Provenance.NEGATION
                if sig.kind is SignalKind.NEGATION
                else Provenance.PARTITION,
                idempotency_key=f"{leg.market_id}|{cycle_id}|paired",  # type: ignore[union-attr]
            )
            placed += self._place(order, now, snapshot_batch)
        return placed

    def _execute_latency_trade(
        self,
        cycle_id: int,
        now: int,
        sig: ArbitrageSignal,
        snapshot_batch: dict[str, MarketSnapshot],
        cfg: AppConfig,
    ) -> int:
        market_id = sig.market_ids[0]
        snap = snapshot_batch.get(market_id)
        p_cex = self._latency_p_cex.get(market_id)
        if snap is None or p_cex is None:
            return 0
        if sig.direction is SignalDirection.BUY_YES:
            p, price, side = p_cex, float(snap.yes_price), Side.BUY_YES
        else:
            p, price, side = 1.0 - p_cex, float(snap.no_price()), Side.BUY_NO
        size = self._order_size(p, price)
        if size <= 0:
            return 0
        order = OrderRequest(
            market_id=market_id,
            side=side,
            size_usdc=size,
            limit_price=Probability(price),
            mode=cfg.trading_mode,
            provenance=Provenance.LATENCY,
            idempotency_key=f"{market_id}|{cycle_id}|{side.value}",
        )
        return self._place(order, now, snapshot_batch)

    # ------------------------------------------------------------------
    # loop driver
    # ------------------------------------------------------------------

    def stop(self) -> None:
        self._stop.set()

    async def run_loop(self, max_cycles: int | None = None) -> list[ScanCycleReport]:
        """Fixed-rate scan loop; runs until stop() or max_cycles."""
        limit = max_cycles if max_cycles is not None else self.config.cycles
        interval = self.config.scan_interval_secs
        target = self.ts.monotonic()
        while not self._stop.is_set():
            await self.run_cycle()
            if limit and self.cycle_id >= limit:
                break
            end = self.ts.monotonic()
            target = max(target + interval, end)
            await self.ts.sleep(target - end)
        return self.reports

    def final_summary(self) -> dict:
        return {
            "cycles": self.cycle_id,
            "ledger": self.ledger.summary().to_record(),
            "risk": self.risk.state.to_record(),
        }

    def write_run_summary(self) -> Path:
        path = Path(self.config.data_dir) / "run_summary.json"
        path.write_text(json.dumps(self.final_summary(), sort_keys=True, indent=2) + "\n")
        return path

    def close(self) -> None:
        self.store.close()


def load_partition_groups(path: str | Path) -> list[PartitionGroup]:
    """JSON config: {"<group_id>": ["market_a", "market_b", ...], ...}"""
    raw = json.loads(Path(path).read_text())
    return [PartitionGroup(group_id=gid, member_market_ids=tuple(members)) for gid, members in raw.items()]


def replay_summary(data_dir: str | Path, config: AppConfig) -> dict:
    """Rebuild ledger and risk state from the persisted logs.

    Dual path to the live accumulation: the result must equal the live
    run's final_summary() (modulo the equity-curve seed point, which is
    not part of the summary record).
    """
    store = Store(data_dir, fsync=False)
    try:
        records = list(store.replay("trades"))
        cycle_rows = list(store.replay("cycles"))
        n_cycles = max((rec.get("cycle_id", 0) for rec in cycle_rows), default=0)
        candidates = [rec["ts"] for rec in records] + [rec["ts"] for rec in cycle_rows]
        start_ms = min(candidates) if candidates else 0
        ledger = replay_ledger(records, config.bankroll_usdc, start_ms=start_ms)
        risk = RiskManager(
            RiskConfig(
                kelly_multiplier=config.kelly_fraction,
                max_position_usdc=config.max_position_usdc,
                daily_loss_limit_usdc=config.daily_loss_limit_usdc,
                bankroll_usdc=config.bankroll_usdc,
            ),
            start_ms,
        )
        # Resolutions and operator resumes must interleave in original order.
        events: list[tuple[int, int, str, dict]] = []
        for rec in records:
            if rec.get("kind") == "resolution":
                events.append((rec["ts"], rec["seq"], "pnl", rec))
        for rec in store.replay("commands"):
            if rec.get("kind") == "resume_after_loss_limit":
                events.append((rec["ts"], rec["seq"], "resume", rec))
        events.sort(key=lambda e: (e[0], e[1]))
        for ts, _, kind, rec in events:
            if kind == "pnl":
                risk.on_realized_pnl(rec["pnl"], ts)
            else:
                risk.resume(rec.get("issued_by", "?"), ts)
        last_cycle_ts = max((rec["ts"] for rec in cycle_rows), default=start_ms)
        risk.tick(last_cycle_ts)
        return {
            "cycles": n_cycles,
            "ledger": ledger.summary().to_record(),
            "risk": risk.state.to_record(),
        }
    finally:
        store.close()


def compact_store(data_dir: str | Path, older_than_days: float, now_ms: int | None = None) -> dict:
    """Archive records of markets resolved before the horizon.

    A record moves to the table's archive file when its market resolved
    (resolve_market command) at or before now - horizon and the record
    itself predates the horizon. Replay reads archives, so reconstruction
    stays exact after compaction.
    """
    from .domain import utc_now_ms

    now = now_ms if now_ms is not None else utc_now_ms()
    cutoff = now - int(older_than_days * 86_400_000)
    store = Store(data_dir, fsync=True)
    try:
        resolved_before_cutoff = {
            rec["args"]["market_id"]
            for rec in store.replay("commands")
            if rec.get("kind") == "resolve_market" and rec["ts"] <= cutoff
        }
        summary: dict[str, dict] = {}
        if not resolved_before_cutoff:
            return {"cutoff_ms": cutoff, "resolved_markets": 0, "tables": summary}

        def eligible(rec: dict) -> bool:
            if rec.get("ts", now) >= cutoff:
                return False
            ids = rec.get("market_ids") or (
                [rec["market_id"]] if rec.get("market_id") else []
            )
            return bool(ids) and all(mid in resolved_before_cutoff for mid in ids)

        for table in ("snapshots", "predictions", "consensus", "signals", "trades"):
            kept, archived = store.compact(table, eligible)
            summary[table] = {"kept": kept, "archived": archived}
        return {
            "cutoff_ms": cutoff,
            "resolved_markets": len(resolved_before_cutoff),
            "tables": summary,
        }
    finally:
        store.close()


def _json_safe(value: float) -> float | str:
    return value if value == value and abs(value) != float("inf") else "inf"
