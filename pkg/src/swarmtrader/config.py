"""Effective configuration: defaults < config file < environment < CLI flags.

The config file is flat ``KEY = value`` lines (# comments, blank lines
allowed); keys are the same upper-snake names as the environment
variables, documented in the README.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

# (attribute, env/file key, type, default)
_SPEC: list[tuple[str, str, type, Any]] = [
    ("market_source", "MARKET_SOURCE", str, ""),
    ("min_volume_usdc", "MIN_VOLUME_USDC", float, 0.0),
    ("min_liquidity_usdc", "MIN_LIQUIDITY_USDC", float, 0.0),
    ("scan_interval_secs", "SCAN_INTERVAL_SECS", float, 5.0),
    ("max_markets_per_cycle", "MAX_MARKETS_PER_CYCLE", int, 50),
    ("agents_per_market", "AGENTS_PER_MARKET", int, 25),
    ("max_in_flight", "MAX_IN_FLIGHT", int, 8),
    ("cache_ttl_secs", "CACHE_TTL_SECS", float, 300.0),
    ("persona_pool_path", "PERSONA_POOL_PATH", str, ""),
    ("min_ev", "MIN_EV", float, 0.05),
    ("max_stddev", "MAX_STDDEV", float, 0.30),
    ("weight_swarm", "WEIGHT_SWARM", float, 0.70),
    ("min_agents", "MIN_AGENTS", int, 5),
    ("kelly_fraction", "KELLY_FRACTION", float, 0.25),
    ("max_position_usdc", "MAX_POSITION_USDC", float, 10.0),
    ("daily_loss_limit_usdc", "DAILY_LOSS_LIMIT_USDC", float, 100.0),
    ("bankroll_usdc", "BANKROLL_USDC", float, 1000.0),
    ("trading_mode", "TRADING_MODE", str, "paper"),
    ("fee_bps", "FEE_BPS", float, 0.0),
    ("slippage_bps", "SLIPPAGE_BPS", float, 0.0),
    ("negation_deviation_threshold", "NEGATION_DEVIATION_THRESHOLD", float, 0.02),
    ("partition_groups_path", "PARTITION_GROUPS_PATH", str, ""),
    ("js_priority_threshold", "JS_PRIORITY_THRESHOLD", float, 0.05),
    ("cex_poll_interval_secs", "CEX_POLL_INTERVAL_SECS", float, 5.0),
    ("latency_threshold", "LATENCY_THRESHOLD", float, 0.10),
    ("strike_map_path", "STRIKE_MAP_PATH", str, ""),
    ("vol_window_hours", "VOL_WINDOW_HOURS", float, 24.0),
    ("cex_quote_url", "CEX_QUOTE_URL", str, ""),
    ("cex_replay_path", "CEX_REPLAY_PATH", str, ""),
    ("listen_addr", "LISTEN_ADDR", str, "127.0.0.1:8800"),
    ("api_token", "API_TOKEN", str, ""),
    ("open_reads", "OPEN_READS", bool, True),
    ("ws_buffer_frames", "WS_BUFFER_FRAMES", int, 256),
    ("data_dir", "DATA_DIR", str, "./data"),
    ("provider", "PROVIDER", str, "simulated"),
    ("sim_seed", "SIM_SEED", int, 0),
    ("sim_noise_sigma", "SIM_NOISE_SIGMA", float, 0.5),
    ("sim_bias", "SIM_BIAS", float, 0.0),
    ("sim_latency_secs", "SIM_LATENCY_SECS", float, 0.0),
    ("price_basis", "PRICE_BASIS", str, "last"),
    ("virtual_time", "VIRTUAL_TIME", bool, False),
    ("cycles", "CYCLES", int, 0),
    ("fsync", "FSYNC", bool, True),
]

_KEY_TO_ATTR = {key: attr for attr, key, _, _ in _SPEC}


def _coerce(value: str, typ: type, key: str):
    try:
        if typ is bool:
            if str(value).strip().lower() in ("1", "true", "yes", "on"):
                return True
            if str(value).strip().lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value}")
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


@dataclass(frozen=True)
class AppConfig:
    market_source: str = ""
    min_volume_usdc: float = 0.0
    min_liquidity_usdc: float = 0.0
    scan_interval_secs: float = 5.0
    max_markets_per_cycle: int = 50
    agents_per_market: int = 25
    max_in_flight: int = 8
    cache_ttl_secs: float = 300.0
    persona_pool_path: str = ""
    min_ev: float = 0.05
    max_stddev: float = 0.30
    weight_swarm: float = 0.70
    min_agents: int = 5
    kelly_fraction: float = 0.25
    max_position_usdc: float = 10.0
    daily_loss_limit_usdc: float = 100.0
    bankroll_usdc: float = 1000.0
    trading_mode: str = "paper"
    fee_bps: float = 0.0
    slippage_bps: float = 0.0
    negation_deviation_threshold: float = 0.02
    partition_groups_path: str = ""
    js_priority_threshold: float = 0.05
    cex_poll_interval_secs: float = 5.0
    latency_threshold: float = 0.10
    strike_map_path: str = ""
    vol_window_hours: float = 24.0
    cex_quote_url: str = ""
    cex_replay_path: str = ""
    listen_addr: str = "127.0.0.1:8800"
    api_token: str = ""
    open_reads: bool = True
    ws_buffer_frames: int = 256
    data_dir: str = "./data"
    provider: str = "simulated"
    sim_seed: int = 0
    sim_noise_sigma: float = 0.5
    sim_bias: float = 0.0
    sim_latency_secs: float = 0.0
    price_basis: str = "last"
    virtual_time: bool = False
    cycles: int = 0
    fsync: bool = True

    def validate(self) -> "AppConfig":
        if self.trading_mode not in ("paper", "live"):
            raise ConfigError(f"TRADING_MODE must be paper or live: {self.trading_mode}")
        if self.scan_interval_secs <= 0:
            raise ConfigError("SCAN_INTERVAL_SECS must be > 0")
        if not 0.0 <= self.weight_swarm <= 1.0:
            raise ConfigError("WEIGHT_SWARM must lie in [0, 1]")
        if not 0.0 < self.kelly_fraction <= 1.0:
            raise ConfigError("KELLY_FRACTION must lie in (0, 1]")
        if self.min_ev < 0:
            raise ConfigError("MIN_EV must be >= 0")
        if self.max_position_usdc <= 0 or self.bankroll_usdc <= 0:
            raise ConfigError("position cap and bankroll must be > 0")
        if self.daily_loss_limit_usdc <= 0:
            raise ConfigError("DAILY_LOSS_LIMIT_USDC must be > 0")
        if self.agents_per_market < 1:
            raise ConfigError("AGENTS_PER_MARKET must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigError("MAX_IN_FLIGHT must be >= 1")
        return self

    def effective_items(self) -> list[tuple[str, Any]]:
        """(KEY, value) pairs in declaration order, for check-config."""
        return [(key, getattr(self, attr)) for attr, key, _, _ in _SPEC]


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat KEY = value grammar; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file missing: {p}")
    for line_no, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{line_no}: expected KEY = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.upper()] = value.strip().strip('"').strip("'")
    return out


def load_config(
    file_path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> AppConfig:
    """Merge defaults, config file, environment, and explicit overrides."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    file_values = parse_config_file(file_path) if file_path else {}
    for attr, key, typ, default in _SPEC:
        value: Any = default
        if key in file_values:
            value = _coerce(file_values[key], typ, key)
        if key in env:
            value = _coerce(env[key], typ, key)
        values[attr] = value
    unknown = set(file_values) - set(_KEY_TO_ATTR)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = AppConfig(**values)
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        config = replace(config, **clean)
    return config.validate()
