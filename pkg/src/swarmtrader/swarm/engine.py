"""Cohort evaluation: cache, bounded concurrency, retries, parsing.

One SwarmEngine instance owns the semaphore bounding simultaneous
in-flight provider calls across *all* markets in a scan cycle, the TTL
response cache, and the failure counters. Failed or unparseable agents
are dropped and counted, never fabricated; a market where every agent
fails raises SwarmEmptyError and is skipped for the cycle.
"""

from __future__ import annotations

import asyncio
import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

from ..domain import MarketSnapshot, Probability, utc_now_ms
from ..errors import ParseError, SwarmEmptyError
from .personas import Persona
from .prompts import build_prompt, parse_agent_response
from .providers import InferenceProvider

logger = logging.getLogger(__name__)

DEFAULT_CACHE_TTL_SECS = 300.0


@dataclass(frozen=True, slots=True)
class AgentPrediction:
    persona_id: str
    market_id: str
    probability: Probability
    confidence: float
    reasoning: str
    provider_id: str
    latency_ms: float
    created_at: int

    def to_record(self) -> dict:
        return {
            "persona_id": self.persona_id,
            "market_id": self.market_id,
            "probability": float(self.probability),
            "confidence": self.confidence,
            "reasoning": self.reasoning,
            "provider_id": self.provider_id,
            "latency_ms": self.latency_ms,
            "created_at": self.created_at,
        }


def market_digest(market: MarketSnapshot) -> str:
    """Cache-key digest of market information, deliberately price-free:
    price drift alone must not invalidate cached analysis."""
    payload = f"{market.title}|{market.expiry}|{market.category.value}"
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def cache_key(persona_id: str, market: MarketSnapshot) -> str:
    return f"{persona_id}|{market.market_id}|{market_digest(market)}"


@dataclass(slots=True)
class CacheEntry:
    prediction: AgentPrediction
    expires_at: int


class PredictionCache:
    """TTL cache for agent predictions; entries are never served past
    expires_at. Clock injection keeps expiry testable and runs
    deterministic."""

    def __init__(self, ttl_secs: float = DEFAULT_CACHE_TTL_SECS, clock: Callable[[], int] | None = None):
        self.ttl_ms = int(ttl_secs * 1000)
        self._clock = clock or utc_now_ms
        self._entries: dict[str, CacheEntry] = {}

    def get(self, key: str) -> AgentPrediction | None:
        entry = self._entries.get(key)
        if entry is None:
            return None
        if self._clock() >= entry.expires_at:
            del self._entries[key]
            return None
        return entry.prediction

    def put(self, key: str, prediction: AgentPrediction) -> None:
        self._entries[key] = CacheEntry(prediction, self._clock() + self.ttl_ms)

    def purge(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(slots=True)
class EngineStats:
    provider_calls: int = 0
    cache_hits: int = 0
    parse_failures: int = 0
    transport_failures: int = 0
    max_observed_in_flight: int = 0

    def snapshot(self) -> dict:
        return {
            "provider_calls": self.provider_calls,
            "cache_hits": self.cache_hits,
            "parse_failures": self.parse_failures,
            "transport_failures": self.transport_failures,
            "max_observed_in_flight": self.max_observed_in_flight,
        }


class SwarmEngine:
    def __init__(
        self,
        provider: InferenceProvider,
        cache: PredictionCache | None = None,
        clock: Callable[[], int] | None = None,
        wall_timer: Callable[[], float] | None = None,
    ):
        self.provider = provider
        self.cache = cache if cache is not None else PredictionCache()
        self._clock = clock or utc_now_ms
        self._wall_timer = wall_timer
        self._sem = asyncio.Semaphore(provider.max_in_flight)
        self._in_flight = 0
        self.stats = EngineStats()

    async def _call_provider(self, prompt: str) -> str:
        async with self._sem:
            self._in_flight += 1
            self.stats.max_observed_in_flight = max(
                self.stats.max_observed_in_flight, self._in_flight
            )
            try:
                self.stats.provider_calls += 1
                return await self.provider.complete(prompt)
            finally:
                self._in_flight -= 1

    async def _evaluate_one(
        self, persona: Persona, market: MarketSnapshot
    ) -> AgentPrediction | None:
        key = cache_key(persona.persona_id, market)
        cached = self.cache.get(key)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached
        prompt = build_prompt(persona, market)
        raw = None
        # One retry per persona per cycle, transport errors only.
        for attempt in (0, 1):
            started = self._wall_timer() if self._wall_timer else None
            try:
                raw = await self._call_provider(prompt)
                break
            except asyncio.CancelledError:
                raise
            except ParseError:
                raise
            except Exception as exc:
                self.stats.transport_failures += 1
                logger.warning(
                    "provider call failed for %s on %s (attempt %d): %s",
                    persona.persona_id,
                    market.market_id,
                    attempt,
                    exc,
                )
        if raw is None:
            return None
        latency_ms = (
            (self._wall_timer() - started) * 1000.0 if self._wall_timer and started is not None else 0.0
        )
        try:
            parsed = parse_agent_response(raw)
        except ParseError as exc:
            self.stats.parse_failures += 1
            logger.warning(
                "unparseable response from %s on %s: %s", persona.persona_id, market.market_id, exc
            )
            return None
        prediction = AgentPrediction(
            persona_id=persona.persona_id,
            market_id=market.market_id,
            probability=Probability(parsed.probability),
            confidence=parsed.confidence,
            reasoning=parsed.reasoning,
            provider_id=self.provider.provider_id,
            latency_ms=latency_ms,
            created_at=self._clock(),
        )
        self.cache.put(key, prediction)
        return prediction

    async def evaluate_market(
        self, market: MarketSnapshot, cohort: Sequence[Persona]
    ) -> list[AgentPrediction]:
        """One prediction per persona that succeeded, in cohort order."""
        if not cohort:
            raise SwarmEmptyError(f"empty cohort for {market.market_id}")
        results = await asyncio.gather(
            *(self._evaluate_one(p, market) for p in cohort)
        )
        predictions = [r for r in results if r is not None]
        if not predictions:
            raise SwarmEmptyError(f"all {len(cohort)} agents failed on {market.market_id}")
        return predictions
