"""Kelly sizing, hard caps, and the daily loss circuit breaker.

Risk decisions are pure functions of (inputs, state); RiskState snapshots
are immutable and a single RiskManager instance is the serialized
authority through which all fills and size requests pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone

from .domain import NetOdds, Probability
from .errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_KELLY_MULTIPLIER = 0.25
DEFAULT_MAX_POSITION_USDC = 10.0


@dataclass(frozen=True, slots=True)
class RiskConfig:
    kelly_multiplier: float = DEFAULT_KELLY_MULTIPLIER
    max_position_usdc: float = DEFAULT_MAX_POSITION_USDC
    daily_loss_limit_usdc: float = 100.0
    bankroll_usdc: float = 1000.0

    def __post_init__(self) -> None:
        if not 0.0 < self.kelly_multiplier <= 1.0:
            raise ValidationError(f"kelly_multiplier must lie in (0, 1]: {self.kelly_multiplier}")
        for name in ("max_position_usdc", "daily_loss_limit_usdc", "bankroll_usdc"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True, slots=True)
class RiskState:
    realized_pnl_today_usdc: float = 0.0
    suspended: bool = False
    suspended_at: int | None = None
    trading_day: date = date(1970, 1, 1)

    def to_record(self) -> dict:
        return {
            "realized_pnl_today_usdc": self.realized_pnl_today_usdc,
            "suspended": self.suspended,
            "suspended_at": self.suspended_at,
            "trading_day": self.trading_day.isoformat(),
        }


def kelly_fraction(p: Probability, b: NetOdds) -> float:
    """Growth-optimal bankroll fraction f* = (p*b - (1-p)) / b.

    Negative values mark an unfavorable bet; its sign always agrees with
    the EV of the same (p, b).
    """
    p_f = float(p)
    return (p_f * float(b) - (1.0 - p_f)) / float(b)


def position_size(f_star: float, config: RiskConfig) -> float:
    """Fractional-Kelly stake in USDC, never above the hard cap.

    size = min(max(f*, 0) * multiplier * bankroll, max_position).
    """
    if f_star <= 0.0:
        return 0.0
    return min(f_star * config.kelly_multiplier * config.bankroll_usdc, config.max_position_usdc)


def trading_day_of(ts_ms: int) -> date:
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc).date()


def roll_day_if_needed(state: RiskState, now_ms: int) -> RiskState:
    """UTC-midnight rollover: PnL resets to zero and suspension clears."""
    today = trading_day_of(now_ms)
    if today == state.trading_day:
        return state
    return RiskState(trading_day=today)


def record_fill_and_check(
    pnl_delta_usdc: float, state: RiskState, config: RiskConfig, now_ms: int
) -> RiskState:
    """Apply one realized PnL event and trip the breaker if the daily loss
    limit is hit (inclusive: losses totalling exactly -limit suspend).

    Profitable fills never clear an active suspension; only day rollover
    or an explicit operator resume does.
    """
    state = roll_day_if_needed(state, now_ms)
    pnl = state.realized_pnl_today_usdc + pnl_delta_usdc
    state = replace(state, realized_pnl_today_usdc=pnl)
    if not state.suspended and pnl <= -config.daily_loss_limit_usdc:
        logger.warning(
            "daily loss limit hit: pnl_today=%.2f limit=%.2f; suspending scan loop",
            pnl,
            config.daily_loss_limit_usdc,
        )
        state = replace(state, suspended=True, suspended_at=now_ms)
    return state


def operator_resume(state: RiskState, operator: str, now_ms: int) -> RiskState:
    """Clear suspension before rollover; every resume is attributed."""
    if not state.suspended:
        return state
    logger.warning("suspension cleared by operator %s at %d", operator, now_ms)
    return replace(state, suspended=False, suspended_at=None)


class RiskManager:
    """Serialized owner of the live RiskState; callers get immutable snapshots."""

    def __init__(self, config: RiskConfig, now_ms: int):
        self.config = config
        self._state = RiskState(trading_day=trading_day_of(now_ms))

    @property
    def state(self) -> RiskState:
        return self._state

    def size_order(self, p: Probability, b: NetOdds) -> float:
        return position_size(kelly_fraction(p, b), self.config)

    def on_realized_pnl(self, pnl_delta_usdc: float, now_ms: int) -> RiskState:
        self._state = record_fill_and_check(pnl_delta_usdc, self._state, self.config, now_ms)
        return self._state

    def tick(self, now_ms: int) -> RiskState:
        self._state = roll_day_if_needed(self._state, now_ms)
        return self._state

    def resume(self, operator: str, now_ms: int) -> RiskState:
        self._state = operator_resume(self._state, operator, now_ms)
        return self._state

    @property
    def suspended(self) -> bool:
        return self._state.suspended
