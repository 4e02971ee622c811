"""The persona pool and cohort sampling.

The pool ships as a data file (50 entries, one per persona) loaded at
startup; pool contents are configuration, not code. Cohorts are sampled
uniformly without replacement, deterministically for a given seed.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..errors import ConfigError, SampleError

POOL_SIZE = 50


class Archetype(str, enum.Enum):
    MOMENTUM_TRADER = "momentum_trader"
    CONTRARIAN = "contrarian"
    MACRO_ECONOMIST = "macro_economist"
    TECHNICAL_ANALYST = "technical_analyst"
    FUNDAMENTAL_INVESTOR = "fundamental_investor"
    POLITICAL_SCIENTIST = "political_scientist"
    SPORTS_STATISTICIAN = "sports_statistician"
    PUBLIC_HEALTH_EXPERT = "public_health_expert"
    DOMAIN_SPECIALIST = "domain_specialist"
    GENERALIST = "generalist"


@dataclass(frozen=True, slots=True)
class Persona:
    persona_id: str
    archetype: Archetype
    display_name: str
    prompt_preamble: str


def load_persona_pool(path: str | Path | None = None) -> list[Persona]:
    """Load and validate the 50-persona pool.

    Default pool comes from the packaged data file; a custom path may
    override it. Duplicate ids or a pool size other than 50 abort startup.
    """
    if path is None:
        raw = resources.files("swarmtrader.data").joinpath("personas.json").read_text()
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"persona pool file missing: {p}")
        raw = p.read_text()
    try:
        entries = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"persona pool is not valid JSON: {exc}") from exc
    pool = []
    for e in entries:
        try:
            pool.append(
                Persona(
                    persona_id=e["persona_id"],
                    archetype=Archetype(e["archetype"]),
                    display_name=e["display_name"],
                    prompt_preamble=e["prompt_preamble"],
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad persona entry {e}: {exc}") from exc
    ids = [p.persona_id for p in pool]
    if len(set(ids)) != len(ids):
        raise ConfigError("persona ids must be unique")
    if len(pool) != POOL_SIZE:
        raise ConfigError(f"persona pool must hold exactly {POOL_SIZE} entries, got {len(pool)}")
    return pool


def sample_personas(pool: Sequence[Persona], n: int, rng_seed: int) -> list[Persona]:
    """n distinct personas, uniform without replacement, seeded."""
    if n < 1 or n > len(pool):
        raise SampleError(f"cannot sample {n} from pool of {len(pool)}")
    return random.Random(rng_seed).sample(list(pool), n)
