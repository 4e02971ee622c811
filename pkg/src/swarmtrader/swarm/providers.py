"""Inference providers behind one interface.

RemoteHttpProvider adapts any completion endpoint speaking
POST {model, prompt, max_tokens} -> {text}; base URL and API key come
from PROVIDER_<NAME>_URL / PROVIDER_<NAME>_KEY environment variables.

SimulatedProvider is the deterministic test double that makes desk-scale
runs reproducible: given (seed, prompt) it always emits the same
well-formed response. Its probability is the market's hidden ground
truth pushed through logit space with persona-specific noise:

    p = logistic(logit(truth) + bias + N(0, noise_sigma^2))
"""

from __future__ import annotations

import asyncio
import hashlib
import math
import os
import random
from dataclasses import dataclass
from typing import Mapping, Protocol, runtime_checkable

import httpx

from ..errors import ConfigError, SourceUnavailable
from .prompts import market_title_from_prompt


@runtime_checkable
class InferenceProvider(Protocol):
    provider_id: str
    kind: str
    max_in_flight: int
    timeout: float

    async def complete(self, prompt: str) -> str: ...


def _stable_u64(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def simulated_provider_complete(
    seed: int,
    prompt: str,
    ground_truth: float,
    noise_sigma: float,
    bias: float,
) -> str:
    """One deterministic simulated agent response.

    noise_sigma = 0 and bias = 0 reproduce the ground truth exactly (the
    logit/logistic round trip is short-circuited to avoid rounding).
    """
    if noise_sigma < 0:
        raise ConfigError(f"noise_sigma must be >= 0: {noise_sigma}")
    rng = random.Random(_stable_u64(seed, prompt))
    if noise_sigma == 0.0 and bias == 0.0:
        probability = ground_truth
        rng.gauss(0.0, 1.0)  # keep the draw sequence aligned across configs
    else:
        shifted = logit(ground_truth) + bias + rng.gauss(0.0, noise_sigma)
        probability = logistic(shifted)
    confidence = round(0.55 + 0.4 * rng.random(), 3)
    lines = [
        "Considering the reference class and the evidence available, the case",
        "for YES rests on the drivers discussed above while the case for NO",
        "rests on the usual frictions and reversion.",
        f"PROBABILITY: {probability!r}",
        f"CONFIDENCE: {confidence!r}",
        "REASONING: Base-rate anchored estimate adjusted for question-specific evidence.",
    ]
    return "\n".join(lines)


@dataclass
class SimulatedProvider:
    """Deterministic provider: same (seed, prompt) -> same response.

    Ground truth per market comes from `truths` (title -> probability)
    when supplied, else from a seeded hash of the title, so every persona
    sees the same hidden truth for a given market.
    """

    seed: int = 0
    noise_sigma: float = 0.5
    bias: float = 0.0
    latency_s: float = 0.0
    truths: Mapping[str, float] | None = None
    provider_id: str = "simulated"
    kind: str = "simulated"
    max_in_flight: int = 8
    timeout: float = 5.0

    def ground_truth_for(self, title: str) -> float:
        if self.truths is not None and title in self.truths:
            return float(self.truths[title])
        u = _stable_u64("truth", self.seed, title) / 2**64
        return 0.02 + 0.96 * u

    async def complete(self, prompt: str) -> str:
        if self.latency_s > 0:
            await asyncio.sleep(self.latency_s)
        title = market_title_from_prompt(prompt)
        return simulated_provider_complete(
            seed=self.seed,
            prompt=prompt,
            ground_truth=self.ground_truth_for(title),
            noise_sigma=self.noise_sigma,
            bias=self.bias,
        )


@dataclass
class RemoteHttpProvider:
    provider_id: str
    base_url: str
    api_key: str = ""
    model: str = "default"
    max_tokens: int = 1024
    kind: str = "remote_http"
    max_in_flight: int = 8
    timeout: float = 30.0
    transport: httpx.AsyncBaseTransport | None = None

    @classmethod
    def from_env(cls, name: str, **over) -> "RemoteHttpProvider":
        url = os.environ.get(f"PROVIDER_{name.upper()}_URL")
        if not url:
            raise ConfigError(f"PROVIDER_{name.upper()}_URL is not set")
        key = os.environ.get(f"PROVIDER_{name.upper()}_KEY", "")
        return cls(provider_id=name.lower(), base_url=url, api_key=key, **over)

    async def complete(self, prompt: str) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        body = {"model": self.model, "prompt": prompt, "max_tokens": self.max_tokens}
        try:
            async with httpx.AsyncClient(
                transport=self.transport, timeout=self.timeout
            ) as client:
                resp = await client.post(self.base_url, json=body, headers=headers)
                resp.raise_for_status()
                payload = resp.json()
        except httpx.HTTPError as exc:
            raise SourceUnavailable(f"provider {self.provider_id}: {exc}") from exc
        if "text" not in payload:
            raise SourceUnavailable(f"provider {self.provider_id}: payload missing 'text'")
        return str(payload["text"])
