"""Shared fixtures: synthetic market corpora and terminal builders."""

import asyncio
import json

import pytest

from swarmtrader.config import load_config
from swarmtrader.marketdata import write_fixture
from swarmtrader.domain import Category, MarketSnapshot, Probability
from swarmtrader.orchestrator import Terminal
from swarmtrader.timesource import VirtualTime

T0 = 1_700_000_000_000
DAY_MS = 86_400_000


def make_snapshot(market_id, title, price, volume=1000.0, category=Category.OTHER,
                  expiry=T0 + 30 * DAY_MS, observed_at=T0, liquidity=200.0):
    return MarketSnapshot(
        market_id=market_id,
        title=title,
        yes_price=Probability(price),
        volume_usdc=volume,
        liquidity_usdc=liquidity,
        category=category,
        expiry=expiry,
        observed_at=observed_at,
    )


def small_corpus(n=8, price_lo=0.2, price_hi=0.8):
    """Plain filler markets with unique token sets (no negation cues)."""
    markets = []
    for i in range(n):
        price = price_lo + (price_hi - price_lo) * (i / max(n - 1, 1))
        markets.append(
            make_snapshot(
                f"mkt{i:03d}",
                f"Outcome question topic{i:03d} item{i:03d} resolves favorably",
                round(price, 4),
                volume=1000.0 + 10 * i,
            )
        )
    return markets


def write_corpus(tmp_path, markets, name="markets.jsonl"):
    path = tmp_path / name
    write_fixture(path, markets)
    return path


def terminal_config(tmp_path, fixture_path, **over):
    base = dict(
        market_source=str(fixture_path),
        data_dir=str(tmp_path / "data"),
        virtual_time=True,
        fsync=False,
        scan_interval_secs=5.0,
        agents_per_market=10,
        min_agents=3,
        max_in_flight=8,
        sim_seed=1234,
        sim_noise_sigma=0.3,
        provider="simulated",
        trading_mode="paper",
        bankroll_usdc=1000.0,
        daily_loss_limit_usdc=100.0,
    )
    base.update(over)
    return load_config(env={}, overrides=base)


def build_terminal(tmp_path, markets=None, config_over=None, **terminal_kw):
    markets = markets if markets is not None else small_corpus()
    fixture_path = write_corpus(tmp_path, markets)
    config = terminal_config(tmp_path, fixture_path, **(config_over or {}))
    return Terminal(config, time_source=VirtualTime(T0), **terminal_kw)


def run(coro):
    loop = asyncio.new_event_loop()
    try:
        return loop.run_until_complete(coro)
    finally:
        loop.close()


@pytest.fixture
def corpus():
    return small_corpus()
