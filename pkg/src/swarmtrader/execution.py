"""Order execution: paper fills, live submission, settlement, PnL.

The Ledger is a single serialized authority over positions and realized
PnL; fills and resolutions are totally ordered and every mutation is
mirrored to the append-only trades table, from which the whole ledger
can be rebuilt (see replay_ledger).

Paper fills assume a full fill at the snapshot price of the chosen side
with zero fees and slippage by default; FEE_BPS shaves purchased shares
and SLIPPAGE_BPS worsens the fill price when stress-testing EV margins.
Live orders are limit orders at the decision-time price, guarded by the
two-key rule: TRADING_MODE=live in config AND a runtime arm command.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Protocol

from .aggregation import Side
from .domain import MarketSnapshot, Probability
from .errors import AmbiguousSubmitError, StaleMarketError, ValidationError
from .persistence import Store, validate_probability_fields

logger = logging.getLogger(__name__)


class TradeStatus(str, enum.Enum):
    FILLED = "filled"
    REJECTED = "rejected"
    RESOLVED_WIN = "resolved_win"
    RESOLVED_LOSS = "resolved_loss"


class Provenance(str, enum.Enum):
    SWARM = "swarm"
    NEGATION = "negation"
    PARTITION = "partition"
    LATENCY = "latency"


@dataclass(frozen=True, slots=True)
class OrderRequest:
    market_id: str
    side: Side
    size_usdc: float
    limit_price: Probability
    mode: str  # "paper" | "live"
    provenance: Provenance
    idempotency_key: str = ""

    def __post_init__(self) -> None:
        if self.size_usdc <= 0:
            raise ValidationError(f"order size must be > 0: {self.size_usdc}")
        if self.mode not in ("paper", "live"):
            raise ValidationError(f"unknown mode: {self.mode}")


@dataclass(frozen=True, slots=True)
class Trade:
    trade_id: str
    market_id: str
    side: Side
    size_usdc: float
    shares: float
    fill_price: Probability
    mode: str
    provenance: Provenance
    filled_at: int
    status: TradeStatus
    reject_reason: str | None = None
    exchange_order_id: str | None = None

    def to_record(self) -> dict:
        return {
            "kind": "fill" if self.status is TradeStatus.FILLED else self.status.value,
            "trade_id": self.trade_id,
            "market_id": self.market_id,
            "side": self.side.value,
            "size_usdc": self.size_usdc,
            "shares": self.shares,
            "fill_price": float(self.fill_price),
            "mode": self.mode,
            "provenance": self.provenance.value,
            "filled_at": self.filled_at,
            "status": self.status.value,
            "reject_reason": self.reject_reason,
            "exchange_order_id": self.exchange_order_id,
        }


@dataclass(frozen=True, slots=True)
class LedgerSummary:
    realized_pnl_usdc: float
    win_rate: float | None
    open_exposure_usdc: float
    bankroll_usdc: float
    win_count: int
    loss_count: int
    open_positions: int
    equity_curve: tuple[tuple[int, float], ...]

    def to_record(self) -> dict:
        return {
            "realized_pnl_usdc": self.realized_pnl_usdc,
            "win_rate": self.win_rate,
            "open_exposure_usdc": self.open_exposure_usdc,
            "bankroll_usdc": self.bankroll_usdc,
            "win_count": self.win_count,
            "loss_count": self.loss_count,
            "open_positions": self.open_positions,
        }


class OrderClient(Protocol):
    """Exchange adapter for live limit orders."""

    def submit(self, order: OrderRequest, idempotency_key: str) -> str: ...

    def cancel(self, order_id: str) -> None: ...


class Ledger:
    """Positions, realized PnL, win/loss counts, equity curve (cash bankroll)."""

    def __init__(self, starting_bankroll_usdc: float, now_ms: int):
        if starting_bankroll_usdc <= 0:
            raise ValidationError("starting bankroll must be > 0")
        self.starting_bankroll = starting_bankroll_usdc
        self.bankroll = starting_bankroll_usdc
        self.open_positions: dict[str, Trade] = {}
        self.realized_pnl = 0.0
        self.win_count = 0
        self.loss_count = 0
        self.equity_curve: list[tuple[int, float]] = [(now_ms, starting_bankroll_usdc)]

    def record_fill(self, trade: Trade) -> None:
        if trade.status is not TradeStatus.FILLED:
            return
        self.open_positions[trade.trade_id] = trade
        self.bankroll -= trade.size_usdc
        self.equity_curve.append((trade.filled_at, self.bankroll))

    def settle(self, market_id: str, outcome: str, now_ms: int) -> list[tuple[Trade, float]]:
        """Settle every open position on the market at 1 (side won) or 0.

        Returns (settled trade, realized pnl) pairs; a resolution with no
        open positions is a logged no-op.
        """
        if outcome not in ("yes", "no"):
            raise ValidationError(f"outcome must be 'yes' or 'no': {outcome}")
        victims = [t for t in self.open_positions.values() if t.market_id == market_id]
        if not victims:
            logger.warning("resolution for %s with no open positions", market_id)
            return []
        settled = []
        for trade in victims:
            won = (trade.side is Side.BUY_YES) == (outcome == "yes")
            settle_price = 1.0 if won else 0.0
            pnl = trade.shares * (settle_price - float(trade.fill_price))
            payout = trade.shares * settle_price
            self.bankroll += payout
            self.realized_pnl += pnl
            if won:
                self.win_count += 1
            else:
                self.loss_count += 1
            status = TradeStatus.RESOLVED_WIN if won else TradeStatus.RESOLVED_LOSS
            resolved = replace(trade, status=status)
            del self.open_positions[trade.trade_id]
            settled.append((resolved, pnl))
        self.equity_curve.append((now_ms, self.bankroll))
        return settled

    def summary(self) -> LedgerSummary:
        resolved = self.win_count + self.loss_count
        return LedgerSummary(
            realized_pnl_usdc=self.realized_pnl,
            win_rate=(self.win_count / resolved) if resolved else None,
            open_exposure_usdc=sum(t.size_usdc for t in self.open_positions.values()),
            bankroll_usdc=self.bankroll,
            win_count=self.win_count,
            loss_count=self.loss_count,
            open_positions=len(self.open_positions),
            equity_curve=tuple(self.equity_curve),
        )


class Executor:
    """Fills orders, enforces the cap and the live-arming interlock, and
    appends every event to the trades table."""

    def __init__(
        self,
        ledger: Ledger,
        store: Store | None = None,
        max_position_usdc: float = 10.0,
        fee_bps: float = 0.0,
        slippage_bps: float = 0.0,
        order_client: OrderClient | None = None,
    ):
        self.ledger = ledger
        self.store = store
        self.max_position_usdc = max_position_usdc
        self.fee_bps = fee_bps
        self.slippage_bps = slippage_bps
        self.order_client = order_client
        self.live_enabled = False  # config key (TRADING_MODE=live)
        self.live_armed = False  # runtime key (arm command)
        self._trade_counter = 0
        self._pending_submits: set[str] = set()

    def _next_trade_id(self) -> str:
        self._trade_counter += 1
        return f"T{self._trade_counter:06d}"

    def _persist(self, trade: Trade) -> None:
        if self.store is not None:
            record = trade.to_record()
            record["ts"] = trade.filled_at
            self.store.append("trades", record, validate=validate_probability_fields)

    def _guard_cap(self, order: OrderRequest) -> None:
        # Defense in depth: sizing already capped upstream.
        if order.size_usdc > self.max_position_usdc + 1e-9:
            raise ValidationError(
                f"order size {order.size_usdc} exceeds cap {self.max_position_usdc}"
            )

    def paper_fill(self, order: OrderRequest, snapshots: Mapping[str, MarketSnapshot], now_ms: int) -> Trade:
        """Simulated fill at the snapshot price of the chosen side."""
        if order.mode != "paper":
            raise ValidationError("paper_fill requires a paper-mode order")
        self._guard_cap(order)
        snapshot = snapshots.get(order.market_id)
        if snapshot is None:
            raise StaleMarketError(f"{order.market_id} missing from snapshot batch")
        raw_price = (
            float(snapshot.yes_price) if order.side is Side.BUY_YES else float(snapshot.no_price())
        )
        price = min(raw_price * (1.0 + self.slippage_bps / 10_000.0), 1.0 - 1e-9)
        shares = order.size_usdc * (1.0 - self.fee_bps / 10_000.0) / price
        trade = Trade(
            trade_id=self._next_trade_id(),
            market_id=order.market_id,
            side=order.side,
            size_usdc=order.size_usdc,
            shares=shares,
            fill_price=Probability(price),
            mode="paper",
            provenance=order.provenance,
            filled_at=now_ms,
            status=TradeStatus.FILLED,
        )
        self.ledger.record_fill(trade)
        self._persist(trade)
        return trade

    def live_submit(self, order: OrderRequest, now_ms: int) -> Trade:
        """Limit order through the order-client abstraction.

        Not-armed submissions are rejected trades, not exceptions: the
        interlock is an expected state, not a fault. Transport ambiguity
        raises AmbiguousSubmitError and parks the idempotency key so a
        retry cannot double-submit.
        """
        if order.mode != "live":
            raise ValidationError("live_submit requires a live-mode order")
        self._guard_cap(order)
        if not (self.live_enabled and self.live_armed):
            trade = Trade(
                trade_id=self._next_trade_id(),
                market_id=order.market_id,
                side=order.side,
                size_usdc=order.size_usdc,
                shares=0.0,
                fill_price=order.limit_price,
                mode="live",
                provenance=order.provenance,
                filled_at=now_ms,
                status=TradeStatus.REJECTED,
                reject_reason="not_armed",
            )
            self._persist(trade)
            return trade
        if self.order_client is None:
            raise ValidationError("live mode requires an order client")
        key = order.idempotency_key or f"{order.market_id}|{order.side.value}"
        if key in self._pending_submits:
            raise AmbiguousSubmitError(
                f"submit for {key} already in flight with unknown outcome; operator attention required"
            )
        try:
            order_id = self.order_client.submit(order, key)
        except AmbiguousSubmitError:
            self._pending_submits.add(key)
            raise
        except Exception as exc:
            trade = Trade(
                trade_id=self._next_trade_id(),
                market_id=order.market_id,
                side=order.side,
                size_usdc=order.size_usdc,
                shares=0.0,
                fill_price=order.limit_price,
                mode="live",
                provenance=order.provenance,
                filled_at=now_ms,
                status=TradeStatus.REJECTED,
                reject_reason=str(exc),
            )
            self._persist(trade)
            return trade
        shares = order.size_usdc / float(order.limit_price)
        trade = Trade(
            trade_id=self._next_trade_id(),
            market_id=order.market_id,
            side=order.side,
            size_usdc=order.size_usdc,
            shares=shares,
            fill_price=order.limit_price,
            mode="live",
            provenance=order.provenance,
            filled_at=now_ms,
            status=TradeStatus.FILLED,
            exchange_order_id=order_id,
        )
        self.ledger.record_fill(trade)
        self._persist(trade)
        return trade

    def resolve_market(self, market_id: str, outcome: str, now_ms: int) -> list[tuple[Trade, float]]:
        """Settle open positions and persist one resolution record per trade."""
        settled = self.ledger.settle(market_id, outcome, now_ms)
        if self.store is not None:
            for trade, pnl in settled:
                record = trade.to_record()
                record.update({"kind": "resolution", "outcome": outcome, "pnl": pnl, "ts": now_ms})
                self.store.append("trades", record, validate=validate_probability_fields)
        return settled


def replay_ledger(records: Iterable[dict], starting_bankroll: float, start_ms: int = 0) -> Ledger:
    """Rebuild a Ledger from the append-only trades table.

    Dual path to the live accumulation: replay(store) must equal the
    state the live run produced.
    """
    ledger = Ledger(starting_bankroll, start_ms)
    for rec in records:
        kind = rec.get("kind")
        if kind == "fill":
            trade = Trade(
                trade_id=rec["trade_id"],
                market_id=rec["market_id"],
                side=Side(rec["side"]),
                size_usdc=rec["size_usdc"],
                shares=rec["shares"],
                fill_price=Probability(rec["fill_price"]),
                mode=rec["mode"],
                provenance=Provenance(rec["provenance"]),
                filled_at=rec["filled_at"],
                status=TradeStatus.FILLED,
            )
            ledger.record_fill(trade)
        elif kind == "resolution":
            ledger.settle(rec["market_id"], rec["outcome"], rec["ts"])
    return ledger


class MockOrderClient:
    """Scriptable client for tests and dry-runs of the live path."""

    def __init__(self, behavior: str = "accept"):
        self.behavior = behavior  # "accept" | "reject" | "timeout"
        self.submitted: list[tuple[OrderRequest, str]] = []
        self.seen_keys: set[str] = set()

    def submit(self, order: OrderRequest, idempotency_key: str) -> str:
        if idempotency_key in self.seen_keys:
            raise AssertionError(f"duplicate submit for idempotency key {idempotency_key}")
        self.seen_keys.add(idempotency_key)
        if self.behavior == "timeout":
            raise AmbiguousSubmitError("transport died mid-submit")
        if self.behavior == "reject":
            raise RuntimeError("insufficient balance")
        self.submitted.append((order, idempotency_key))
        return f"EX-{len(self.submitted):04d}"

    def cancel(self, order_id: str) -> None:
        pass
