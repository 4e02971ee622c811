"""Exception hierarchy shared across the terminal."""


class SwarmTraderError(Exception):
    """Base class for all terminal errors."""


class ValidationError(SwarmTraderError):
    """A value violates a domain invariant."""


class DegenerateOddsError(ValidationError):
    """Price at 0 or 1 yields no meaningful net odds."""


class ParseError(SwarmTraderError):
    """A payload or agent response could not be parsed.

    Carries the offending raw text / record id in ``args`` so failures
    can be logged and skipped without losing forensic detail.
    """


class SourceUnavailable(SwarmTraderError):
    """Upstream market/quote source unreachable; scan cycle skips it."""


class SampleError(SwarmTraderError):
    """Requested cohort larger than the persona pool."""


class PromptBuildError(SwarmTraderError):
    """Market record too incomplete to build an agent prompt."""


class SwarmEmptyError(SwarmTraderError):
    """Every agent in the cohort failed; market skipped this cycle."""


class EmptySwarmError(SwarmTraderError):
    """Consensus requested over zero predictions."""


class GroupError(SwarmTraderError):
    """Partition group smaller than two members."""


class ExpiredError(SwarmTraderError):
    """Strike contract already past expiry at evaluation time."""


class DegenerateVolError(SwarmTraderError):
    """Zero volatility estimate where the pricing model needs sigma > 0."""


class VolEstimateError(SwarmTraderError):
    """Too few samples in the window to estimate volatility."""


class StaleMarketError(SwarmTraderError):
    """Order references a market missing from the current snapshot batch."""


class AmbiguousSubmitError(SwarmTraderError):
    """Live order outcome unknown (transport died mid-flight); needs operator attention."""


class EmptyEvalError(SwarmTraderError):
    """Scoring requested over zero forecast records."""


class StorageError(SwarmTraderError):
    """Persistence layer could not durably append."""


class ConfigError(SwarmTraderError):
    """Invalid or contradictory configuration; fatal at startup."""
