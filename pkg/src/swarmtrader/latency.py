"""CEX-implied probabilities for crypto strike markets and latency signals.

The pricing model is the driftless log-normal: the probability that spot
S finishes above strike K after T hours is Phi(ln(S/K) / (sigma*sqrt(T)))
with sigma the hourly volatility of log returns. No -sigma^2/2 * T drift
correction is applied (documented flag point; see repo notes).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .analysis import ArbitrageSignal, SignalDirection, SignalKind
from .domain import Probability, utc_now_ms
from .errors import (
    DegenerateVolError,
    ExpiredError,
    ParseError,
    SourceUnavailable,
    ValidationError,
    VolEstimateError,
)

MS_PER_HOUR = 3_600_000.0


class StrikeDirection(str, enum.Enum):
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True, slots=True)
class CexQuote:
    symbol: str
    spot: float
    observed_at: int

    def __post_init__(self) -> None:
        if self.spot <= 0:
            raise ValidationError(f"spot must be > 0: {self.spot}")


@dataclass(frozen=True, slots=True)
class StrikeContract:
    market_id: str
    symbol: str
    strike: float
    expiry: int
    direction: StrikeDirection

    def __post_init__(self) -> None:
        if self.strike <= 0:
            raise ValidationError(f"strike must be > 0: {self.strike}")


@dataclass(frozen=True, slots=True)
class VolatilityEstimate:
    symbol: str
    sigma_hourly: float
    window_hours: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.sigma_hourly < 0:
            raise ValidationError("sigma_hourly must be >= 0")
        if self.n_samples < 2:
            raise ValidationError("volatility estimate needs >= 2 samples")


def std_normal_cdf(x: float) -> float:
    """Phi(x) via the complementary error function; abs error well under 1e-9."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def cex_implied_probability(
    quote: CexQuote,
    contract: StrikeContract,
    vol: VolatilityEstimate,
    now_ms: int,
    allow_degenerate: bool = False,
) -> Probability:
    """Model probability the contract finishes in the money.

    `above`: Phi(ln(S/K) / (sigma*sqrt(T))); `below` is its complement.
    sigma = 0 errors by default (zero estimated vol usually means broken
    data); with allow_degenerate and S != K the deterministic limit 0/1
    is returned instead.
    """
    t_hours = (contract.expiry - now_ms) / MS_PER_HOUR
    if t_hours <= 0:
        raise ExpiredError(f"{contract.market_id} expired {-t_hours:.2f}h ago")
    log_moneyness = math.log(quote.spot / contract.strike)
    if vol.sigma_hourly == 0.0:
        if log_moneyness == 0.0 or not allow_degenerate:
            raise DegenerateVolError(f"sigma = 0 for {contract.symbol}")
        p_above = 1.0 if log_moneyness > 0 else 0.0
    else:
        p_above = std_normal_cdf(log_moneyness / (vol.sigma_hourly * math.sqrt(t_hours)))
    if contract.direction is StrikeDirection.ABOVE:
        return Probability(p_above)
    return Probability(1.0 - p_above)


def realized_volatility(
    price_series: Sequence[tuple[int, float]],
    window_hours: float,
    symbol: str = "",
) -> VolatilityEstimate:
    """Sample std-dev of log returns inside the trailing window, scaled to
    per-sqrt-hour units by the mean sampling interval."""
    if not price_series:
        raise VolEstimateError("empty price series")
    end_ms = price_series[-1][0]
    cutoff = end_ms - window_hours * MS_PER_HOUR
    window = [(ts, px) for ts, px in price_series if ts >= cutoff]
    if len(window) < 2:
        raise VolEstimateError(
            f"need >= 2 samples inside {window_hours}h window, got {len(window)}"
        )
    returns = []
    for (t0, p0), (t1, p1) in zip(window, window[1:]):
        if p0 <= 0 or p1 <= 0:
            raise VolEstimateError("non-positive price in series")
        if t1 <= t0:
            raise VolEstimateError("non-increasing timestamps in series")
        returns.append(math.log(p1 / p0))
    mean_dt_hours = (window[-1][0] - window[0][0]) / (len(returns) * MS_PER_HOUR)
    if len(returns) == 1:
        sigma_per_sample = 0.0
    else:
        mean_r = math.fsum(returns) / len(returns)
        var = math.fsum((r - mean_r) ** 2 for r in returns) / (len(returns) - 1)
        sigma_per_sample = math.sqrt(var)
    return VolatilityEstimate(
        symbol=symbol,
        sigma_hourly=sigma_per_sample / math.sqrt(mean_dt_hours),
        window_hours=window_hours,
        n_samples=len(window),
    )


def latency_signal(
    p_cex: float,
    p_poly: float,
    threshold: float,
    market_id: str,
    detected_at: int,
) -> ArbitrageSignal | None:
    """Signal when the model probability and the (possibly stale) market
    price disagree by more than ``threshold``."""
    gap = float(p_cex) - float(p_poly)
    if abs(gap) <= threshold:
        return None
    return ArbitrageSignal(
        kind=SignalKind.LATENCY,
        market_ids=(market_id,),
        magnitude=abs(gap),
        direction=SignalDirection.BUY_YES if gap > 0 else SignalDirection.BUY_NO,
        detected_at=detected_at,
    )


class QuoteSource:
    """Spot quote feed: live HTTP endpoint or line-delimited JSON replay file.

    Replay files carry ``{"symbol", "spot", "observed_at"}`` per line and
    are consumed in order, one quote per poll, repeating the final quote
    once exhausted (a stalled feed, not an error).
    """

    def __init__(
        self,
        kind: str,
        url_template: str = "",
        replay_path: str | Path | None = None,
        timeout: float = 5.0,
        transport: httpx.AsyncBaseTransport | None = None,
        clock: Callable[[], int] | None = None,
    ):
        if kind not in ("http_api", "fixture_file"):
            raise ValidationError(f"unknown quote source kind: {kind}")
        self.kind = kind
        self.url_template = url_template
        self.timeout = timeout
        self._transport = transport
        self._clock = clock
        self._replay: dict[str, list[CexQuote]] = {}
        self._cursor: dict[str, int] = {}
        if kind == "fixture_file":
            if replay_path is None:
                raise ValidationError("fixture_file quote source needs a path")
            self._load_replay(Path(replay_path))

    def _load_replay(self, path: Path) -> None:
        for line_no, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                quote = CexQuote(
                    symbol=rec["symbol"],
                    spot=float(rec["spot"]),
                    observed_at=int(rec["observed_at"]),
                )
            except (KeyError, TypeError, ValueError, ValidationError) as exc:
                raise ParseError(f"bad quote record at line {line_no}: {exc}") from exc
            self._replay.setdefault(quote.symbol, []).append(quote)

    async def poll(self, symbol: str) -> CexQuote:
        if self.kind == "fixture_file":
            quotes = self._replay.get(symbol)
            if not quotes:
                raise SourceUnavailable(f"no replay quotes for {symbol}")
            idx = self._cursor.get(symbol, 0)
            quote = quotes[min(idx, len(quotes) - 1)]
            self._cursor[symbol] = idx + 1
            return quote
        url = self.url_template.format(symbol=symbol)
        try:
            async with httpx.AsyncClient(
                transport=self._transport, timeout=self.timeout
            ) as client:
                resp = await client.get(url)
                resp.raise_for_status()
                payload = resp.json()
        except httpx.HTTPError as exc:
            raise SourceUnavailable(f"quote poll failed for {symbol}: {exc}") from exc
        try:
            spot = float(payload["price"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"quote payload missing price for {symbol}") from exc
        observed = self._clock() if self._clock else utc_now_ms()
        return CexQuote(symbol=symbol, spot=spot, observed_at=observed)


def load_strike_map(path: str | Path) -> dict[str, StrikeContract]:
    """market_id -> StrikeContract from a JSON config file.

    Format: {"<market_id>": {"symbol": "BTC", "strike": 100000,
    "expiry": <ms>, "direction": "above"|"below"}, ...}
    """
    raw = json.loads(Path(path).read_text())
    contracts = {}
    for market_id, item in raw.items():
        contracts[market_id] = StrikeContract(
            market_id=market_id,
            symbol=item["symbol"],
            strike=float(item["strike"]),
            expiry=int(item["expiry"]),
            direction=StrikeDirection(item["direction"]),
        )
    return contracts
