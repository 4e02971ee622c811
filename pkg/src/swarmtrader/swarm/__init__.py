"""Persona pool, inference providers, response parsing, and cohort evaluation."""

from .engine import (
    AgentPrediction,
    CacheEntry,
    EngineStats,
    PredictionCache,
    SwarmEngine,
    cache_key,
    market_digest,
)
from .personas import POOL_SIZE, Archetype, Persona, load_persona_pool, sample_personas
from .prompts import ParsedResponse, build_prompt, market_title_from_prompt, parse_agent_response
from .providers import (
    InferenceProvider,
    RemoteHttpProvider,
    SimulatedProvider,
    logistic,
    logit,
    simulated_provider_complete,
)

__all__ = [
    "AgentPrediction",
    "Archetype",
    "CacheEntry",
    "EngineStats",
    "InferenceProvider",
    "POOL_SIZE",
    "ParsedResponse",
    "Persona",
    "PredictionCache",
    "RemoteHttpProvider",
    "SimulatedProvider",
    "SwarmEngine",
    "build_prompt",
    "cache_key",
    "load_persona_pool",
    "logistic",
    "logit",
    "market_digest",
    "market_title_from_prompt",
    "parse_agent_response",
    "sample_personas",
    "simulated_provider_complete",
]
