"""Prompt construction and structured response parsing.

The one hard rule of prompt building: market-implied probabilities are
withheld. No yes price, no volume-implied odds, nothing the agent could
anchor on; market information enters only at the aggregation stage.

Agents answer free-form reasoning followed by a fenced key-value block:

    PROBABILITY: <number in [0, 1]>
    CONFIDENCE: <number in (0, 1]>
    REASONING: <free text, may span lines>

The block sits at the end so chain-of-thought preamble of arbitrary
length cannot break parsing; the last block in the text wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from datetime import datetime, timezone

from ..domain import MarketSnapshot
from ..errors import ParseError, PromptBuildError

_ANSWER_BLOCK = re.compile(
    r"PROBABILITY:\s*(?P<prob>[0-9.eE+-]+)\s*\n"
    r"\s*CONFIDENCE:\s*(?P<conf>[0-9.eE+-]+)\s*\n"
    r"\s*REASONING:\s*(?P<reasoning>.+)",
    re.DOTALL,
)

_PROMPT_TEMPLATE = """{preamble}

You are evaluating a prediction market. Estimate the probability that it resolves YES.

MARKET: {title}
CATEGORY: {category}
EXPIRES: {expiry}

Think step by step before answering:
- What is the reference class for this question, and its base rate?
- What specific evidence moves the estimate up or down from that base rate?
- What are the main sources of uncertainty, and how strong is your overall evidence?

Do not assume any market price; rely only on your own analysis.

End your answer with exactly this block:
PROBABILITY: <your probability that the market resolves YES, a number between zero and one>
CONFIDENCE: <how much weight your estimate deserves, a number above zero and at most one>
REASONING: <a concise summary of your supporting reasoning>
"""


@dataclass(frozen=True, slots=True)
class ParsedResponse:
    probability: float
    confidence: float
    reasoning: str


def _expiry_label(ts_ms: int) -> str:
    # Whole-second precision: a fractional-seconds suffix would put
    # "<digit>.<digits>" substrings into the prompt, which the
    # price-exclusion property forbids.
    dt = datetime.fromtimestamp(ts_ms // 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d %H:%M:%S UTC")


def build_prompt(persona, market: MarketSnapshot) -> str:
    """Persona-framed, price-blind market prompt."""
    if not market.title.strip():
        raise PromptBuildError(f"market {market.market_id} has an empty title")
    return _PROMPT_TEMPLATE.format(
        preamble=persona.prompt_preamble.strip(),
        title=market.title.strip(),
        category=market.category.value,
        expiry=_expiry_label(market.expiry),
    )


def market_title_from_prompt(prompt: str) -> str:
    """Recover the MARKET line; used by the simulated provider as its
    join key for per-market ground truth."""
    m = re.search(r"^MARKET: (.+)$", prompt, re.MULTILINE)
    if not m:
        raise ParseError("prompt carries no MARKET line")
    return m.group(1)


def parse_agent_response(raw_text: str) -> ParsedResponse:
    """Extract the trailing answer block; nothing is clamped.

    Out-of-range numbers, a missing block, or empty reasoning all reject
    the response, carrying the raw text for forensics.
    """
    start = raw_text.rfind("PROBABILITY:")
    if start == -1:
        raise ParseError(f"no answer block found in: {raw_text[:200]!r}")
    m = _ANSWER_BLOCK.match(raw_text, start)
    if m is None:
        raise ParseError(f"malformed answer block in: {raw_text[start : start + 200]!r}")
    try:
        probability = float(m.group("prob"))
        confidence = float(m.group("conf"))
    except ValueError as exc:
        raise ParseError(f"non-numeric answer fields in: {raw_text[:200]!r}") from exc
    if not 0.0 <= probability <= 1.0:
        raise ParseError(f"probability out of range: {probability}")
    if not 0.0 < confidence <= 1.0:
        raise ParseError(f"confidence out of range: {confidence}")
    reasoning = m.group("reasoning").strip()
    if not reasoning:
        raise ParseError("empty reasoning")
    return ParsedResponse(probability=probability, confidence=confidence, reasoning=reasoning)
