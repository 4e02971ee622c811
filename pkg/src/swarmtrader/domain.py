"""Core value types shared by every other module.

All probabilities are double-precision reals; equality comparisons use an
absolute tolerance of 1e-12. Timestamps are UTC milliseconds since epoch.
Every type here is immutable after construction and safe to share across
tasks and threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import DegenerateOddsError, ValidationError

PROB_TOLERANCE = 1e-12


class Probability(float):
    """A real in [0, 1]. Construction outside that range is rejected."""

    def __new__(cls, value: float) -> "Probability":
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"probability out of range [0, 1]: {value}")
        return super().__new__(cls, value)

    def complement(self) -> "Probability":
        return Probability(1.0 - float(self))


class NetOdds(float):
    """Profit per unit stake on a win; strictly positive."""

    def __new__(cls, b: float) -> "NetOdds":
        b = float(b)
        if not b > 0.0:
            raise ValidationError(f"net odds must be > 0: {b}")
        return super().__new__(cls, b)


class Category(str, enum.Enum):
    POLITICS = "politics"
    ECONOMICS = "economics"
    CRYPTO = "crypto"
    SPORTS = "sports"
    SCIENCE = "science"
    OTHER = "other"

    @classmethod
    def parse(cls, raw: str | None) -> "Category":
        if not raw:
            return cls.OTHER
        try:
            return cls(raw.strip().lower())
        except ValueError:
            return cls.OTHER


def utc_now_ms() -> int:
    return int(datetime.now(timezone.utc).timestamp() * 1000)


def ms_to_iso(ts_ms: int) -> str:
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc).isoformat()


@dataclass(frozen=True, slots=True)
class MarketSnapshot:
    """One binary market's identity and quote at a timestamp.

    ``volume_basis`` records which upstream field backed ``volume_usdc``
    ("h24" trailing-24h volume when the API provides it, else "total").
    """

    market_id: str
    title: str
    yes_price: Probability
    volume_usdc: float
    liquidity_usdc: float
    category: Category
    expiry: int
    observed_at: int
    volume_basis: str = "total"

    def __post_init__(self) -> None:
        if self.volume_usdc < 0:
            raise ValidationError(f"negative volume for {self.market_id}")
        if self.liquidity_usdc < 0:
            raise ValidationError(f"negative liquidity for {self.market_id}")

    @property
    def tradable(self) -> bool:
        """Degenerate 0/1 quotes cannot be priced into odds."""
        return 0.0 < float(self.yes_price) < 1.0

    def no_price(self) -> Probability:
        return self.yes_price.complement()


@dataclass(frozen=True, slots=True)
class BinaryDistribution:
    """(p_yes, p_no) summing to one within 1e-12."""

    p_yes: Probability
    p_no: Probability

    def __post_init__(self) -> None:
        if abs(float(self.p_yes) + float(self.p_no) - 1.0) > PROB_TOLERANCE:
            raise ValidationError(
                f"binary distribution does not sum to 1: {self.p_yes} + {self.p_no}"
            )

    @classmethod
    def from_yes(cls, p_yes: float) -> "BinaryDistribution":
        p = Probability(p_yes)
        return cls(p_yes=p, p_no=p.complement())

    def as_tuple(self) -> tuple[float, float]:
        return (float(self.p_yes), float(self.p_no))


def probability_from_price(price: float) -> Probability:
    """A YES share price strictly inside (0, 1) read as a probability."""
    if not 0.0 < float(price) < 1.0:
        raise ValidationError(f"price must lie strictly in (0, 1): {price}")
    return Probability(price)


def net_odds_from_price(price: float) -> NetOdds:
    """Net decimal odds of a YES buy at ``price``: b = (1 - price) / price.

    Fixed so that expected value is exactly zero when the estimated
    probability equals the market price.
    """
    price = float(price)
    if not 0.0 < price < 1.0:
        raise DegenerateOddsError(f"no finite odds at price {price}")
    return NetOdds((1.0 - price) / price)
