"""Swarm consensus, market mixing, expected value, and trade gates.

Pure functions over immutable batches; safe to evaluate markets in
parallel. The numeric conventions:

* consensus is the confidence-weighted mean  sum(w_i * p_i) / sum(w_i)
* spread is the *population* weighted standard deviation (divide by
  sum(w), not sum(w) - 1): the sampled cohort is the whole population of
  opinions for the cycle
* the combined forecast is the linear mixture
  w_swarm * p_swarm + (1 - w_swarm) * p_market, default 0.70 / 0.30
* EV of a YES buy at net odds b is  p * b - (1 - p)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import NetOdds, Probability, net_odds_from_price
from .errors import EmptySwarmError, ValidationError

DEFAULT_MIN_EV = 0.05
DEFAULT_MAX_STD_DEV = 0.30
DEFAULT_WEIGHT_SWARM = 0.70
DEFAULT_MIN_AGENTS = 5


class GateReason(str, enum.Enum):
    BELOW_EV_THRESHOLD = "below_ev_threshold"
    ABOVE_STDDEV_THRESHOLD = "above_stddev_threshold"
    TOO_FEW_AGENTS = "too_few_agents"


class Side(str, enum.Enum):
    BUY_YES = "buy_yes"
    BUY_NO = "buy_no"


@dataclass(frozen=True, slots=True)
class GateConfig:
    min_ev: float = DEFAULT_MIN_EV
    max_std_dev: float = DEFAULT_MAX_STD_DEV
    weight_swarm: float = DEFAULT_WEIGHT_SWARM
    min_agents: int = DEFAULT_MIN_AGENTS

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight_swarm <= 1.0:
            raise ValidationError(f"weight_swarm must lie in [0, 1]: {self.weight_swarm}")
        if self.min_agents < 1:
            raise ValidationError("min_agents must be >= 1")

    @property
    def weight_market(self) -> float:
        return 1.0 - self.weight_swarm


@dataclass(frozen=True, slots=True)
class SwarmConsensus:
    """Aggregated verdict on one market for one cycle.

    ``ev`` and ``side`` describe the better of the YES/NO candidates;
    ``gated`` is True when the trade gates rejected it.
    """

    market_id: str
    p_swarm: Probability
    std_dev: float
    n_agents: int
    p_market: Probability
    p_combined: Probability
    ev: float
    side: Side
    gated: bool
    gate_reason: GateReason | None


def swarm_consensus(
    predictions: Sequence,
) -> tuple[Probability, float, int]:
    """Confidence-weighted mean and population std-dev of agent probabilities.

    Accepts any sequence of objects exposing ``probability`` and
    ``confidence`` attributes (AgentPrediction, or lightweight test pairs).
    """
    if not predictions:
        raise EmptySwarmError("no predictions to aggregate")
    weights = [float(p.confidence) for p in predictions]
    probs = [float(p.probability) for p in predictions]
    if any(w <= 0.0 for w in weights):
        raise ValidationError("all confidence weights must be > 0")
    total_w = math.fsum(weights)
    mean = math.fsum(w * p for w, p in zip(weights, probs)) / total_w
    var = math.fsum(w * (p - mean) ** 2 for w, p in zip(weights, probs)) / total_w
    # Clamp the tiny negative values fsum can leave on degenerate spreads.
    std = math.sqrt(var) if var > 0.0 else 0.0
    return Probability(mean), std, len(predictions)


def bayesian_combine(
    p_swarm: float, p_market: float, weight_swarm: float = DEFAULT_WEIGHT_SWARM
) -> Probability:
    """Linear mixture of swarm consensus and market-implied probability."""
    if not 0.0 <= weight_swarm <= 1.0:
        raise ValidationError(f"weight_swarm must lie in [0, 1]: {weight_swarm}")
    return Probability(weight_swarm * float(p_swarm) + (1.0 - weight_swarm) * float(p_market))


def expected_value(p_combined: float, b: NetOdds) -> float:
    """Expected profit per unit stake of a YES buy at net odds ``b``."""
    p = float(p_combined)
    return p * float(b) - (1.0 - p)


def apply_gates(
    ev: float, std_dev: float, n_agents: int, config: GateConfig
) -> tuple[bool, GateReason | None]:
    """Trade gate: pass iff EV > min_ev, std_dev < max_std_dev, n >= min_agents.

    Returns (gated, reason); reasons are checked in that fixed order and
    the first failure wins. Comparisons are strict, matching "exceeds"
    and "below".
    """
    if not ev > config.min_ev:
        return True, GateReason.BELOW_EV_THRESHOLD
    if not std_dev < config.max_std_dev:
        return True, GateReason.ABOVE_STDDEV_THRESHOLD
    if n_agents < config.min_agents:
        return True, GateReason.TOO_FEW_AGENTS
    return False, None


def evaluate_candidate(
    market_id: str,
    predictions: Sequence,
    p_market: Probability,
    config: GateConfig,
) -> SwarmConsensus:
    """Full aggregation for one market: consensus, mixture, two-sided EV, gates.

    EV is computed for the YES side; the NO side is evaluated symmetrically
    with p' = 1 - p_combined against the NO price, and the better side is
    the candidate that faces the gates.
    """
    p_swarm, std_dev, n = swarm_consensus(predictions)
    p_combined = bayesian_combine(p_swarm, p_market, config.weight_swarm)
    ev_yes = expected_value(p_combined, net_odds_from_price(p_market))
    ev_no = expected_value(
        Probability(1.0 - float(p_combined)), net_odds_from_price(1.0 - float(p_market))
    )
    if ev_yes >= ev_no:
        side, ev = Side.BUY_YES, ev_yes
    else:
        side, ev = Side.BUY_NO, ev_no
    gated, reason = apply_gates(ev, std_dev, n, config)
    return SwarmConsensus(
        market_id=market_id,
        p_swarm=p_swarm,
        std_dev=std_dev,
        n_agents=n,
        p_market=p_market,
        p_combined=p_combined,
        ev=ev,
        side=side,
        gated=gated,
        gate_reason=reason,
    )


def consensus_to_record(c: SwarmConsensus) -> dict:
    return {
        "market_id": c.market_id,
        "p_swarm": float(c.p_swarm),
        "std_dev": c.std_dev,
        "n_agents": c.n_agents,
        "p_market": float(c.p_market),
        "p_combined": float(c.p_combined),
        "ev": c.ev,
        "side": c.side.value,
        "gated": c.gated,
        "gate_reason": c.gate_reason.value if c.gate_reason else None,
    }


@dataclass(frozen=True, slots=True)
class WeightedEstimate:
    """Lightweight (probability, confidence) holder for numeric call sites."""

    probability: float
    confidence: float


def predictions_from_pairs(pairs: Iterable[tuple[float, float]]) -> list[WeightedEstimate]:
    return [WeightedEstimate(p, w) for p, w in pairs]
