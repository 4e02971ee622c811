"""Fetch and filter active binary markets.

Two interchangeable sources: the exchange's market-metadata HTTP API and
a recorded fixture file (line-delimited JSON, one snapshot per line) for
offline and test runs. Fixture-backed fetches are bit-reproducible: the
same file always yields the same snapshot sequence.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .domain import Category, MarketSnapshot, Probability, utc_now_ms
from .errors import ParseError, SourceUnavailable, ValidationError

logger = logging.getLogger(__name__)

FIXTURE_KEYS = (
    "market_id",
    "title",
    "yes_price",
    "volume_usdc",
    "liquidity_usdc",
    "category",
    "expiry",
    "observed_at",
)


@dataclass(frozen=True, slots=True)
class MarketFilter:
    min_volume_usdc: float = 0.0
    min_liquidity_usdc: float = 0.0
    max_hours_to_expiry: float | None = None
    categories: frozenset[Category] | None = None

    def __post_init__(self) -> None:
        if self.min_volume_usdc < 0 or self.min_liquidity_usdc < 0:
            raise ValidationError("filter thresholds must be nonnegative")
        if self.max_hours_to_expiry is not None and self.max_hours_to_expiry <= 0:
            raise ValidationError("max_hours_to_expiry must be positive")

    def accepts(self, m: MarketSnapshot) -> bool:
        if m.volume_usdc < self.min_volume_usdc:
            return False
        if m.liquidity_usdc < self.min_liquidity_usdc:
            return False
        if self.max_hours_to_expiry is not None:
            if m.expiry - m.observed_at > self.max_hours_to_expiry * 3_600_000:
                return False
        if self.categories is not None and m.category not in self.categories:
            return False
        return True


@dataclass(frozen=True)
class MarketSource:
    kind: str  # "http_api" | "fixture_file"
    endpoint_or_path: str
    poll_timeout: float = 10.0
    limit: int = 500
    price_basis: str = "last"  # "last" | "mid"

    def __post_init__(self) -> None:
        if self.kind not in ("http_api", "fixture_file"):
            raise ValidationError(f"unknown market source kind: {self.kind}")
        if self.price_basis not in ("last", "mid"):
            raise ValidationError(f"price_basis must be 'last' or 'mid': {self.price_basis}")


class MarketFeed:
    """One source, one in-flight fetch at a time.

    HTTP records missing/garbled fields raise ParseError carrying the
    offending record id; fetch logs and skips them rather than failing
    the batch.
    """

    def __init__(
        self,
        source: MarketSource,
        transport: httpx.AsyncBaseTransport | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.source = source
        self._transport = transport
        self._clock = clock or utc_now_ms
        self._lock = asyncio.Lock()

    async def fetch_active_markets(self) -> list[MarketSnapshot]:
        async with self._lock:
            if self.source.kind == "fixture_file":
                return self._fetch_fixture()
            return await self._fetch_http()

    def _fetch_fixture(self) -> list[MarketSnapshot]:
        path = Path(self.source.endpoint_or_path)
        if not path.exists():
            raise SourceUnavailable(f"fixture file missing: {path}")
        snapshots: list[MarketSnapshot] = []
        for line_no, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                snapshots.append(parse_fixture_record(line))
            except ParseError as exc:
                logger.warning("skipping fixture record at line %d: %s", line_no, exc)
        return snapshots

    async def _fetch_http(self) -> list[MarketSnapshot]:
        url = f"{self.source.endpoint_or_path.rstrip('/')}/markets"
        params = {"active": "true", "closed": "false", "limit": str(self.source.limit)}
        try:
            async with httpx.AsyncClient(
                transport=self._transport, timeout=self.source.poll_timeout
            ) as client:
                resp = await client.get(url, params=params)
                resp.raise_for_status()
                payload = resp.json()
        except httpx.HTTPError as exc:
            raise SourceUnavailable(f"market fetch failed: {exc}") from exc
        if not isinstance(payload, list):
            raise SourceUnavailable(f"expected a JSON array of markets, got {type(payload)}")
        observed_at = self._clock()
        snapshots = []
        for record in payload:
            try:
                snap = parse_api_record(record, observed_at, self.source.price_basis)
            except ParseError as exc:
                logger.warning("skipping market record: %s", exc)
                continue
            if snap is not None:
                snapshots.append(snap)
        return snapshots


def parse_fixture_record(line: str) -> MarketSnapshot:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {line[:80]}") from exc
    missing = [k for k in FIXTURE_KEYS if k not in rec]
    if missing:
        raise ParseError(f"record {rec.get('market_id', '?')} missing keys {missing}")
    try:
        return MarketSnapshot(
            market_id=str(rec["market_id"]),
            title=str(rec["title"]),
            yes_price=Probability(float(rec["yes_price"])),
            volume_usdc=float(rec["volume_usdc"]),
            liquidity_usdc=float(rec["liquidity_usdc"]),
            category=Category.parse(rec["category"]),
            expiry=int(rec["expiry"]),
            observed_at=int(rec["observed_at"]),
            volume_basis=str(rec.get("volume_basis", "total")),
        )
    except (TypeError, ValueError, ValidationError) as exc:
        raise ParseError(f"record {rec.get('market_id', '?')}: {exc}") from exc


def parse_api_record(
    record: dict, observed_at: int, price_basis: str = "last"
) -> MarketSnapshot | None:
    """Normalize one API market record; None for resolved/degenerate quotes.

    Price: midpoint of bestBid/bestAsk under `mid` when both are present,
    else the first entry of `outcomePrices` (the YES side). Volume: the
    trailing-24h field when present (recorded as basis "h24"), else total.
    """
    market_id = str(record.get("id", "")) or None
    if market_id is None:
        raise ParseError(f"record missing id: {json.dumps(record)[:80]}")
    try:
        title = record["question"]
        price = _extract_price(record, price_basis)
        if "volume24hr" in record and record["volume24hr"] is not None:
            volume, basis = float(record["volume24hr"]), "h24"
        else:
            volume, basis = float(record.get("volume", 0.0)), "total"
        liquidity = float(record.get("liquidity", 0.0))
        expiry = _parse_end_date(record["endDate"])
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"record {market_id}: {exc}") from exc
    if not 0.0 < price < 1.0:
        return None  # resolved or untradable quote, not an error
    try:
        return MarketSnapshot(
            market_id=market_id,
            title=str(title),
            yes_price=Probability(price),
            volume_usdc=volume,
            liquidity_usdc=liquidity,
            category=Category.parse(record.get("category")),
            expiry=expiry,
            observed_at=observed_at,
            volume_basis=basis,
        )
    except ValidationError as exc:
        raise ParseError(f"record {market_id}: {exc}") from exc


def _extract_price(record: dict, price_basis: str) -> float:
    if price_basis == "mid" and record.get("bestBid") is not None and record.get("bestAsk"):
        return (float(record["bestBid"]) + float(record["bestAsk"])) / 2.0
    prices = record.get("outcomePrices")
    if prices is None:
        prices = record.get("yes_price")
        if prices is None:
            raise ParseError(f"record {record.get('id')}: no price field")
        return float(prices)
    if isinstance(prices, str):
        prices = json.loads(prices)
    if not isinstance(prices, (list, tuple)) or not prices:
        raise ParseError(f"record {record.get('id')}: malformed outcomePrices")
    return float(prices[0])


def _parse_end_date(raw) -> int:
    if isinstance(raw, (int, float)):
        return int(raw)
    from datetime import datetime

    return int(datetime.fromisoformat(str(raw).replace("Z", "+00:00")).timestamp() * 1000)


def filter_markets(
    markets: Sequence[MarketSnapshot], market_filter: MarketFilter
) -> list[MarketSnapshot]:
    """Inclusive (>=) threshold filter preserving input order."""
    return [m for m in markets if market_filter.accepts(m)]


def write_fixture(path: str | Path, snapshots: Sequence[MarketSnapshot]) -> None:
    """Serialize snapshots to the fixture wire format, one per line."""
    lines = []
    for s in snapshots:
        lines.append(
            json.dumps(
                {
                    "market_id": s.market_id,
                    "title": s.title,
                    "yes_price": float(s.yes_price),
                    "volume_usdc": s.volume_usdc,
                    "liquidity_usdc": s.liquidity_usdc,
                    "category": s.category.value,
                    "expiry": s.expiry,
                    "observed_at": s.observed_at,
                    "volume_basis": s.volume_basis,
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
