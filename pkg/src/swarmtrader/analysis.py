"""Information-theoretic divergence and cross-market structural scans.

Natural logarithms throughout. Zero handling follows the standard
convention 0*ln(0/q) = 0; an absolute-continuity violation (P(x) > 0
while Q(x) = 0) yields +inf as a value, not an error, so ranking logic
can treat it uniformly.
"""

from __future__ import annotations

import enum
import math
import re
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import BinaryDistribution, MarketSnapshot
from .errors import GroupError

LN2 = math.log(2.0)

DEFAULT_DEVIATION_THRESHOLD = 0.02
DEFAULT_MATCH_THRESHOLD = 0.6
DEFAULT_JS_PRIORITY_THRESHOLD = 0.05

# Cues marking the negated side of a candidate pair. "won't" and
# "fails to" are rewritten to "not" during normalization; {under, below}
# pair against the positive counterparts {over, above}.
_NEGATION_CUES = frozenset({"not", "no", "under", "below"})
_POSITIVE_COUNTERPARTS = frozenset({"over", "above"})
_AUXILIARY_TOKENS = frozenset({"will", "does", "do", "did", "to", "be", "is", "are"})

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


class SignalKind(str, enum.Enum):
    DIVERGENCE = "divergence"
    NEGATION = "negation"
    PARTITION = "partition"
    LATENCY = "latency"


class SignalDirection(str, enum.Enum):
    BUY_YES = "buy_yes"
    BUY_NO = "buy_no"
    PAIRED = "paired"


@dataclass(frozen=True, slots=True)
class ArbitrageSignal:
    kind: SignalKind
    market_ids: tuple[str, ...]
    magnitude: float
    direction: SignalDirection
    detected_at: int

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "market_ids": list(self.market_ids),
            "magnitude": self.magnitude,
            "direction": self.direction.value,
            "detected_at": self.detected_at,
        }


@dataclass(frozen=True, slots=True)
class DivergenceReport:
    market_id: str
    kl_swarm_vs_market: float
    kl_market_vs_swarm: float
    js: float
    priority_score: float


@dataclass(frozen=True, slots=True)
class NegationPair:
    market_a: str
    market_b: str
    match_score: float
    p_sum: float
    deviation: float


@dataclass(frozen=True, slots=True)
class PartitionGroup:
    group_id: str
    member_market_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.member_market_ids) < 2:
            raise GroupError(f"partition group {self.group_id} needs >= 2 members")


def kl_divergence(p: BinaryDistribution, q: BinaryDistribution) -> float:
    """Relative entropy D(P||Q) = sum_x P(x) ln(P(x)/Q(x)), in nats."""
    total = 0.0
    for px, qx in zip(p.as_tuple(), q.as_tuple()):
        if px == 0.0:
            continue
        if qx == 0.0:
            return math.inf
        total += px * math.log(px / qx)
    # Rounding can leave a tiny negative total when P ~= Q.
    return max(total, 0.0)


def js_divergence(p: BinaryDistribution, q: BinaryDistribution) -> float:
    """Jensen-Shannon divergence via the mixture M = (P+Q)/2; always finite,
    bounded by ln 2."""
    m = BinaryDistribution.from_yes((float(p.p_yes) + float(q.p_yes)) / 2.0)
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m)


def score_market(p_swarm: float, p_market: float, market_id: str = "") -> DivergenceReport:
    """Both KL directions plus JS for one market; priority rides on JS."""
    dist_swarm = BinaryDistribution.from_yes(p_swarm)
    dist_market = BinaryDistribution.from_yes(p_market)
    js = js_divergence(dist_swarm, dist_market)
    return DivergenceReport(
        market_id=market_id,
        kl_swarm_vs_market=kl_divergence(dist_swarm, dist_market),
        kl_market_vs_swarm=kl_divergence(dist_market, dist_swarm),
        js=js,
        priority_score=js,
    )


def normalize_title(title: str) -> list[str]:
    """Lowercase, strip punctuation, rewrite composite cues, drop auxiliaries,
    and crudely singularize so "wins" pairs with "win"."""
    text = title.lower()
    text = text.replace("won't", " not ").replace("wont", " not ")
    text = re.sub(r"\bfails?\s+to\b", " not ", text)
    text = text.translate(_PUNCT_TABLE)
    tokens = []
    for tok in text.split():
        if tok in _AUXILIARY_TOKENS:
            continue
        if len(tok) > 3 and tok.endswith("s") and not tok.endswith("ss"):
            tok = tok[:-1]
        tokens.append(tok)
    return tokens


def _cue_profile(tokens: Sequence[str]) -> tuple[bool, frozenset[str]]:
    has_negation = any(t in _NEGATION_CUES for t in tokens)
    stripped = frozenset(
        t for t in tokens if t not in _NEGATION_CUES and t not in _POSITIVE_COUNTERPARTS
    )
    return has_negation, stripped


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def find_negation_pairs(
    markets: Sequence[MarketSnapshot],
    match_threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> list[NegationPair]:
    """Candidate complement pairs under the title heuristic.

    A pair qualifies when exactly one side carries a negation cue and the
    cue-stripped token sets overlap with Jaccard >= match_threshold.
    Deterministic for a fixed corpus: output ordered by input position.
    """
    profiles = []
    for m in markets:
        tokens = normalize_title(m.title)
        has_neg, stripped = _cue_profile(tokens)
        profiles.append((m, has_neg, stripped))

    pairs: list[NegationPair] = []
    for i in range(len(profiles)):
        m_a, neg_a, set_a = profiles[i]
        for j in range(i + 1, len(profiles)):
            m_b, neg_b, set_b = profiles[j]
            if neg_a == neg_b:
                continue
            score = _jaccard(set_a, set_b)
            if score < match_threshold:
                continue
            p_sum = float(m_a.yes_price) + float(m_b.yes_price)
            pairs.append(
                NegationPair(
                    market_a=m_a.market_id,
                    market_b=m_b.market_id,
                    match_score=score,
                    p_sum=p_sum,
                    deviation=abs(p_sum - 1.0),
                )
            )
    return pairs


def negation_signals(
    pairs: Iterable[NegationPair],
    detected_at: int,
    deviation_threshold: float = DEFAULT_DEVIATION_THRESHOLD,
) -> list[ArbitrageSignal]:
    """Signals for pairs whose price sum deviates from 1 beyond threshold."""
    return [
        ArbitrageSignal(
            kind=SignalKind.NEGATION,
            market_ids=(p.market_a, p.market_b),
            magnitude=p.deviation,
            direction=SignalDirection.PAIRED,
            detected_at=detected_at,
        )
        for p in pairs
        if p.deviation > deviation_threshold
    ]


def check_partition(
    group: PartitionGroup,
    snapshots: Sequence[MarketSnapshot],
    detected_at: int,
    deviation_threshold: float = DEFAULT_DEVIATION_THRESHOLD,
) -> ArbitrageSignal | None:
    """Signal iff the group's YES prices sum away from 1 beyond threshold.

    Only runs when every member has a snapshot in the batch; partial
    groups are skipped rather than scored on incomplete sums.
    """
    by_id = {s.market_id: s for s in snapshots}
    members = [by_id.get(mid) for mid in group.member_market_ids]
    if any(m is None for m in members):
        return None
    p_sum = math.fsum(float(m.yes_price) for m in members)  # type: ignore[union-attr]
    deviation = abs(p_sum - 1.0)
    if deviation <= deviation_threshold:
        return None
    return ArbitrageSignal(
        kind=SignalKind.PARTITION,
        market_ids=tuple(group.member_market_ids),
        magnitude=deviation,
        direction=SignalDirection.PAIRED,
        detected_at=detected_at,
    )


def divergence_signal(
    report: DivergenceReport,
    p_swarm: float,
    p_market: float,
    detected_at: int,
    js_threshold: float = DEFAULT_JS_PRIORITY_THRESHOLD,
) -> ArbitrageSignal | None:
    """Single-market inefficiency flag when JS clears the priority threshold."""
    if not report.js > js_threshold:
        return None
    direction = SignalDirection.BUY_YES if p_swarm > p_market else SignalDirection.BUY_NO
    return ArbitrageSignal(
        kind=SignalKind.DIVERGENCE,
        market_ids=(report.market_id,),
        magnitude=report.js,
        direction=direction,
        detected_at=detected_at,
    )
