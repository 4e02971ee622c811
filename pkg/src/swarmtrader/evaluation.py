"""Proper-scoring-rule evaluation of forecasts against resolved outcomes.

Pure batch computation over persisted records. Log-loss clamps forecasts
to [eps, 1-eps] with eps = 1e-12 so the metric stays finite at the
endpoints where the raw formula is undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import Probability
from .errors import EmptyEvalError, ValidationError

LOG_LOSS_EPS = 1e-12

# Human expert reference band reported for political/economic question
# sets; rendered as a reference line, never an acceptance target.
EXPERT_BRIER_BAND = (0.10, 0.18)


@dataclass(frozen=True, slots=True)
class ForecastRecord:
    market_id: str
    f_t: Probability
    o_t: int
    source: str  # "swarm" | "combined" | "market" | "agent:<persona_id>"

    def __post_init__(self) -> None:
        if self.o_t not in (0, 1):
            raise ValidationError(f"outcome must be 0 or 1: {self.o_t}")


@dataclass(frozen=True, slots=True)
class CalibrationBin:
    lo: float
    hi: float
    mean_forecast: float | None
    empirical_frequency: float | None
    count: int


@dataclass(frozen=True, slots=True)
class CalibrationTable:
    bins: tuple[CalibrationBin, ...]

    @property
    def total_count(self) -> int:
        return sum(b.count for b in self.bins)


def brier_score(records: Sequence[ForecastRecord]) -> float:
    """Mean squared error between forecasts and outcomes: (1/N) sum (f-o)^2."""
    if not records:
        raise EmptyEvalError("no forecast records")
    return math.fsum((float(r.f_t) - r.o_t) ** 2 for r in records) / len(records)


def log_loss(records: Sequence[ForecastRecord]) -> float:
    """Negative mean log-likelihood, forecasts clamped to [eps, 1-eps]."""
    if not records:
        raise EmptyEvalError("no forecast records")
    total = 0.0
    for r in records:
        f = min(max(float(r.f_t), LOG_LOSS_EPS), 1.0 - LOG_LOSS_EPS)
        total += math.log(f) if r.o_t == 1 else math.log(1.0 - f)
    return -total / len(records)


def reliability_bins(
    records: Sequence[ForecastRecord], n_bins: int, equal_mass: bool = False
) -> CalibrationTable:
    """Per-bin mean forecast vs empirical outcome frequency.

    Default is equal-width bins on [0, 1] (last bin closed above); the
    equal-mass variant splits sorted forecasts into quantile chunks.
    Empty bins carry count 0 and None statistics.
    """
    if n_bins < 2:
        raise ValidationError(f"n_bins must be >= 2: {n_bins}")
    if equal_mass:
        return _equal_mass_bins(records, n_bins)
    buckets: list[list[ForecastRecord]] = [[] for _ in range(n_bins)]
    for r in records:
        idx = min(int(float(r.f_t) * n_bins), n_bins - 1)
        buckets[idx].append(r)
    bins = []
    for i, bucket in enumerate(buckets):
        lo, hi = i / n_bins, (i + 1) / n_bins
        if bucket:
            mean_f = math.fsum(float(r.f_t) for r in bucket) / len(bucket)
            freq = math.fsum(r.o_t for r in bucket) / len(bucket)
            bins.append(CalibrationBin(lo, hi, mean_f, freq, len(bucket)))
        else:
            bins.append(CalibrationBin(lo, hi, None, None, 0))
    return CalibrationTable(bins=tuple(bins))


def _equal_mass_bins(records: Sequence[ForecastRecord], n_bins: int) -> CalibrationTable:
    ordered = sorted(records, key=lambda r: float(r.f_t))
    n = len(ordered)
    bins = []
    for i in range(n_bins):
        start, stop = (i * n) // n_bins, ((i + 1) * n) // n_bins
        chunk = ordered[start:stop]
        if chunk:
            lo = float(chunk[0].f_t)
            hi = float(chunk[-1].f_t)
            mean_f = math.fsum(float(r.f_t) for r in chunk) / len(chunk)
            freq = math.fsum(r.o_t for r in chunk) / len(chunk)
            bins.append(CalibrationBin(lo, hi, mean_f, freq, len(chunk)))
        else:
            bins.append(CalibrationBin(i / n_bins, (i + 1) / n_bins, None, None, 0))
    return CalibrationTable(bins=tuple(bins))


@dataclass(frozen=True, slots=True)
class AgentScore:
    brier: float
    log_loss: float
    n: int


def per_agent_scores(records: Iterable[ForecastRecord]) -> dict[str, AgentScore]:
    """Scores per persona over that persona's own resolved predictions.

    Only "agent:<persona_id>" sources participate; personas with no
    resolved records are absent from the map.
    """
    grouped: dict[str, list[ForecastRecord]] = {}
    for r in records:
        if r.source.startswith("agent:"):
            grouped.setdefault(r.source.split(":", 1)[1], []).append(r)
    return {
        persona: AgentScore(
            brier=brier_score(recs), log_loss=log_loss(recs), n=len(recs)
        )
        for persona, recs in grouped.items()
    }
