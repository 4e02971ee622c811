"""Acceptance suite: one pass/fail line per criterion.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines; each criterion is a test function wrapped so that it prints
`ACCEPTANCE <name>: PASS|FAIL` on completion.
"""

import functools
import json
import math
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import T0, make_snapshot, run, small_corpus, terminal_config, write_corpus
from swarmtrader.aggregation import bayesian_combine, expected_value, predictions_from_pairs, swarm_consensus
from swarmtrader.analysis import (
    LN2,
    PartitionGroup,
    check_partition,
    find_negation_pairs,
    js_divergence,
    kl_divergence,
    negation_signals,
)
from swarmtrader.cli import main
from swarmtrader.domain import BinaryDistribution, NetOdds, Probability, net_odds_from_price
from swarmtrader.evaluation import ForecastRecord, brier_score, log_loss
from swarmtrader.latency import (
    MS_PER_HOUR,
    CexQuote,
    StrikeContract,
    StrikeDirection,
    VolatilityEstimate,
    cex_implied_probability,
    std_normal_cdf,
)
from swarmtrader.orchestrator import ControlCommand, Terminal
from swarmtrader.risk import RiskConfig, RiskState, kelly_fraction, position_size, record_fill_and_check, trading_day_of
from swarmtrader.timesource import RealTime, VirtualTime


def criterion(name, budget_s=None):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            started = time.monotonic()
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            elapsed = time.monotonic() - started
            print(f"\nACCEPTANCE {name}: PASS ({elapsed:.1f}s)")
            if budget_s is not None:
                assert elapsed < budget_s, f"{name} exceeded runtime budget: {elapsed:.1f}s"
            return result

        return wrapper

    return deco


# ---------------------------------------------------------------------------
# Formula suite (< 10 s)
# ---------------------------------------------------------------------------


@criterion("formula-suite", budget_s=10)
def test_formula_suite():
    rng = np.random.default_rng(42)

    # Eq (1): weight-scaling invariance and convexity bounds, 1e-12.
    for _ in range(200):
        n = int(rng.integers(1, 30))
        probs = rng.uniform(0, 1, n)
        weights = rng.uniform(1e-3, 10, n)
        c = float(rng.uniform(0.01, 100))
        base_p, base_sd, _ = swarm_consensus(predictions_from_pairs(zip(probs, weights)))
        scaled_p, scaled_sd, _ = swarm_consensus(predictions_from_pairs(zip(probs, weights * c)))
        assert abs(float(base_p) - float(scaled_p)) < 1e-12
        assert abs(base_sd - scaled_sd) < 1e-12
        assert probs.min() - 1e-12 <= float(base_p) <= probs.max() + 1e-12

    # Eq (2): 0.70/0.30 mixture fixed points, 1e-12.
    for p in np.linspace(0, 1, 101):
        assert abs(float(bayesian_combine(p, p, 0.70)) - p) < 1e-12
    assert abs(float(bayesian_combine(1.0, 0.0, 0.70)) - 0.70) < 1e-12
    assert abs(float(bayesian_combine(0.0, 1.0, 0.70)) - 0.30) < 1e-12

    # Eq (3): EV = 0 at fair price, 1e-12.
    for price in np.linspace(0.001, 0.999, 999):
        assert abs(expected_value(price, net_odds_from_price(price))) < 1e-12

    # Eq (6): Kelly vs Monte-Carlo log-wealth maximization oracle over the
    # stakeable grid f in [0, 1). Unfavorable (p, b) combos have negative
    # f*; the system stakes max(f*, 0), which is what the oracle's argmax
    # (always 0 there) is compared against.
    n_bets = 1_000_000
    fs = np.arange(0.0, 1.0, 0.001)
    for idx_p, p in enumerate((0.55, 0.6, 0.7, 0.9)):
        for idx_b, b in enumerate((0.5, 1.0, 2.0, 3.0)):
            seed = 10_000 + 100 * idx_p + idx_b
            wins = int(np.random.default_rng(seed).binomial(n_bets, p))
            losses = n_bets - wins
            with np.errstate(divide="ignore"):
                growth = wins * np.log1p(fs * b) + losses * np.log1p(-fs)
            oracle_f = float(fs[int(np.argmax(growth))])
            staked = max(kelly_fraction(Probability(p), NetOdds(b)), 0.0)
            assert abs(staked - oracle_f) <= 0.01, (p, b, staked, oracle_f)

    # Eq (7): constant-0.5 forecasts score exactly 0.25.
    for outcomes in ([1] * 10, [0] * 10, [1, 0] * 5):
        records = [ForecastRecord("m", Probability(0.5), o, "combined") for o in outcomes]
        assert brier_score(records) == 0.25

    # Eq (8): constant-0.5 log-loss = ln 2 within 1e-12; clamping stays finite.
    records = [ForecastRecord("m", Probability(0.5), o, "combined") for o in (1, 0, 1)]
    assert abs(log_loss(records) - math.log(2)) < 1e-12
    extreme = [
        ForecastRecord("m", Probability(0.0), 1, "combined"),
        ForecastRecord("m", Probability(1.0), 0, "combined"),
    ]
    assert math.isfinite(log_loss(extreme))


# ---------------------------------------------------------------------------
# Information-theory suite (< 30 s)
# ---------------------------------------------------------------------------


@criterion("information-theory-suite", budget_s=30)
def test_information_theory_suite():
    rng = np.random.default_rng(7)

    # KL/JS properties over 10^4 random binary distribution pairs/triples.
    ps = rng.uniform(1e-6, 1 - 1e-6, 10_000)
    qs = rng.uniform(1e-6, 1 - 1e-6, 10_000)
    rs = rng.uniform(1e-6, 1 - 1e-6, 10_000)
    for p, q, r in zip(ps, qs, rs):
        dp = BinaryDistribution.from_yes(p)
        dq = BinaryDistribution.from_yes(q)
        dr = BinaryDistribution.from_yes(r)
        kl_pq = kl_divergence(dp, dq)
        assert kl_pq >= 0.0
        assert kl_divergence(dp, dp) == 0.0
        js_pq = js_divergence(dp, dq)
        assert js_pq == js_divergence(dq, dp)  # symmetry, exact
        assert 0.0 <= js_pq <= LN2 + 1e-12
        ab = math.sqrt(js_pq)
        bc = math.sqrt(js_divergence(dq, dr))
        ac = math.sqrt(js_divergence(dp, dr))
        assert ac <= ab + bc + 1e-9

    # std_normal_cdf vs quadrature oracle on [-8, 8].
    density = lambda t: math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
    max_err = 0.0
    for x in np.linspace(-8, 8, 161):
        oracle, _ = integrate.quad(density, -12.0, float(x), limit=200)
        max_err = max(max_err, abs(std_normal_cdf(float(x)) - oracle))
    assert max_err <= 1e-9, max_err

    # cex_implied_probability vs Monte-Carlo log-normal exceedance,
    # 4x4x3 (S/K, sigma, T) grid, 10^6 paths, 3 standard errors.
    now = T0
    mc_rng = np.random.default_rng(123)
    z = mc_rng.standard_normal(1_000_000)
    for i, ratio in enumerate((0.95, 1.0, 1.05, 1.15)):
        for j, sigma in enumerate((0.01, 0.02, 0.04, 0.08)):
            for k, t_hours in enumerate((24.0, 168.0, 720.0)):
                spot, strike = 100.0 * ratio, 100.0
                contract = StrikeContract(
                    market_id="m",
                    symbol="BTC",
                    strike=strike,
                    expiry=now + int(t_hours * MS_PER_HOUR),
                    direction=StrikeDirection.ABOVE,
                )
                vol = VolatilityEstimate("BTC", sigma, 24.0, 100)
                analytic = float(
                    cex_implied_probability(CexQuote("BTC", spot, now), contract, vol, now)
                )
                terminal = spot * np.exp(sigma * math.sqrt(t_hours) * z)
                mc = float(np.mean(terminal > strike))
                se = math.sqrt(max(analytic * (1 - analytic), 1e-12) / 1_000_000)
                assert abs(analytic - mc) <= 3 * se, (ratio, sigma, t_hours, analytic, mc, se)


# ---------------------------------------------------------------------------
# Swarm-advantage synthetic reproduction (< 2 min)
# ---------------------------------------------------------------------------


@criterion("swarm-advantage-reproduction", budget_s=120)
def test_swarm_advantage_reproduction():
    n_runs, n_markets, n_agents = 100, 2000, 25
    agent_noise, bias_sd, market_noise = 0.8, 0.25, 0.30

    consensus_beats_median = 0
    swarm_briers, combined_briers, market_briers = [], [], []
    swarm_rmse, market_rmse = [], []

    for r in range(n_runs):
        rng = np.random.default_rng(1000 + r)
        p_true = rng.uniform(0.05, 0.95, n_markets)
        logit_true = np.log(p_true / (1.0 - p_true))
        outcomes = (rng.uniform(0, 1, n_markets) < p_true).astype(int)
        bias = rng.normal(0, bias_sd, n_agents)  # drawn once per run
        eps = rng.normal(0, agent_noise, (n_agents, n_markets))
        agent_probs = 1.0 / (1.0 + np.exp(-(logit_true[None, :] + bias[:, None] + eps)))
        weights = rng.uniform(0.55, 0.95, (n_agents, n_markets))
        market_prior = 1.0 / (
            1.0 + np.exp(-(logit_true + rng.normal(0, market_noise, n_markets)))
        )

        consensus = np.empty(n_markets)
        combined = np.empty(n_markets)
        for m in range(n_markets):
            pairs = predictions_from_pairs(zip(agent_probs[:, m], weights[:, m]))
            p_swarm, _, _ = swarm_consensus(pairs)
            consensus[m] = float(p_swarm)
            combined[m] = float(bayesian_combine(p_swarm, market_prior[m], 0.70))

        def brier_of(forecasts):
            records = [
                ForecastRecord(f"m{m}", Probability(float(f)), int(o), "combined")
                for m, (f, o) in enumerate(zip(forecasts, outcomes))
            ]
            return brier_score(records)

        b_consensus = brier_of(consensus)
        b_combined = brier_of(combined)
        b_market = brier_of(market_prior)
        agent_briers = np.mean((agent_probs - outcomes[None, :]) ** 2, axis=1)
        if r == 0:
            # Oracle cross-check: the vectorized per-agent Brier matches Eq (7).
            assert abs(agent_briers[0] - brier_of(agent_probs[0])) < 1e-12

        if b_consensus < float(np.median(agent_briers)):
            consensus_beats_median += 1
        swarm_briers.append(b_consensus)
        combined_briers.append(b_combined)
        market_briers.append(b_market)
        swarm_rmse.append(float(np.sqrt(np.mean((consensus - p_true) ** 2))))
        market_rmse.append(float(np.sqrt(np.mean((market_prior - p_true) ** 2))))

    # Clause 1: consensus beats the median single agent in >= 95 of 100 runs.
    assert consensus_beats_median >= 95, consensus_beats_median

    # Precondition of clause 2: market prior noise exceeds swarm noise.
    assert np.mean(market_rmse) > np.mean(swarm_rmse)

    # Clause 2: the 0.70/0.30 mixture beats both pure inputs (aggregate
    # over the 100 seeded runs; the per-run margin sits inside sampling
    # noise at 2,000 markets by construction).
    assert np.mean(combined_briers) < np.mean(swarm_briers)
    assert np.mean(combined_briers) < np.mean(market_briers)


# ---------------------------------------------------------------------------
# Cross-market scanner
# ---------------------------------------------------------------------------


def _scanner_corpus():
    markets = []
    deviant_pairs = []
    consistent_pairs = []
    # 10 planted negation pairs with |sum - 1| > 0.02.
    for i in range(10):
        a, b = f"neg{i}a", f"neg{i}b"
        p_a = 0.30 + 0.03 * i
        gap = 0.05 + 0.02 * i  # deviations 0.05 .. 0.23
        p_b = 1.0 - p_a + gap
        markets.append(
            make_snapshot(a, f"Will entrant{i} claim trophy{i} outright", round(p_a, 4))
        )
        markets.append(
            make_snapshot(b, f"Will entrant{i} fail to claim trophy{i} outright", round(p_b, 4))
        )
        deviant_pairs.append(frozenset((a, b)))
    # 5 planted consistent pairs (deviation <= 0.02).
    for i in range(5):
        a, b = f"con{i}a", f"con{i}b"
        p_a = 0.40 + 0.05 * i
        markets.append(
            make_snapshot(a, f"Will sponsor{i} renew charter{i} early", round(p_a, 4))
        )
        markets.append(
            make_snapshot(b, f"Will sponsor{i} fail to renew charter{i} early", round(1.0 - p_a + 0.005, 4))
        )
        consistent_pairs.append(frozenset((a, b)))
    # 3 partition groups with sum deviations {0.0, 0.04, 0.4}.
    groups = []
    for gi, prices in enumerate(
        ([0.25, 0.25, 0.25, 0.25], [0.26, 0.26, 0.26, 0.26], [0.15, 0.15, 0.15, 0.15])
    ):
        ids = []
        for mi, price in enumerate(prices):
            mid = f"part{gi}m{mi}"
            ids.append(mid)
            markets.append(
                make_snapshot(mid, f"Will bracket{gi} slot{mi} take segment{gi}", price)
            )
        groups.append(PartitionGroup(f"group{gi}", tuple(ids)))
    # Fillers with unique token sets and no negation cues, up to 200 markets.
    while len(markets) < 200:
        i = len(markets)
        markets.append(
            make_snapshot(
                f"fill{i}", f"Will venture{i} reach milestone{i} quarter{i}", 0.2 + (i % 60) / 100
            )
        )
    return markets, deviant_pairs, consistent_pairs, groups


@criterion("cross-market-scanner")
def test_cross_market_scanner():
    markets, deviant, consistent, groups = _scanner_corpus()
    assert len(markets) == 200

    pairs = find_negation_pairs(markets)
    found_sets = {frozenset((p.market_a, p.market_b)) for p in pairs}
    # Every planted pair (deviant or consistent) is detected as a pair.
    for wanted in deviant + consistent:
        assert wanted in found_sets

    signals = negation_signals(pairs, detected_at=T0, deviation_threshold=0.02)
    signal_sets = {frozenset(s.market_ids) for s in signals}
    # Recall 10/10 on the deviant pairs.
    assert signal_sets >= set(deviant)
    # Zero signals on consistent pairs, zero fabricated pairs.
    assert signal_sets == set(deviant), signal_sets

    results = [
        check_partition(g, markets, detected_at=T0, deviation_threshold=0.02) for g in groups
    ]
    assert results[0] is None  # exact partition, deviation 0.0
    assert results[1] is not None and results[1].magnitude == pytest.approx(0.04)
    assert results[2] is not None and results[2].magnitude == pytest.approx(0.40)


# ---------------------------------------------------------------------------
# End-to-end determinism
# ---------------------------------------------------------------------------


@criterion("end-to-end-determinism")
def test_end_to_end_determinism(tmp_path):
    fixture = write_corpus(tmp_path, small_corpus(n=10))

    def run_once(name):
        data_dir = tmp_path / name
        code = main(
            [
                "run",
                "--no-server",
                "--market-source", str(fixture),
                "--data-dir", str(data_dir),
                "--virtual-time", "true",
                "--fsync", "false",
                "--cycles", "5",
                "--agents-per-market", "10",
                "--min-agents", "3",
                "--sim-seed", "2024",
                "--sim-noise-sigma", "0.5",
            ]
        )
        assert code == 0
        return data_dir

    dir_a = run_once("runA")
    dir_b = run_once("runB")

    trades_a = (dir_a / "trades.jsonl").read_bytes()
    trades_b = (dir_b / "trades.jsonl").read_bytes()
    assert trades_a and trades_a == trades_b  # byte-identical trade logs

    cycles_a = (dir_a / "cycles.jsonl").read_bytes()
    cycles_b = (dir_b / "cycles.jsonl").read_bytes()
    assert cycles_a == cycles_b  # identical ScanCycleReport sequences
    assert len(cycles_a.splitlines()) == 5

    summary_a = json.loads((dir_a / "run_summary.json").read_text())
    from swarmtrader.orchestrator import replay_summary
    from swarmtrader.config import load_config

    config = load_config(env={}, overrides={"data_dir": str(dir_a)})
    rebuilt = replay_summary(dir_a, config)
    assert rebuilt["ledger"] == summary_a["ledger"]


# ---------------------------------------------------------------------------
# Risk interlocks
# ---------------------------------------------------------------------------


@criterion("risk-interlocks")
def test_risk_interlocks(tmp_path):
    # Suspension fires on the exact fill that crosses the limit.
    config = RiskConfig(daily_loss_limit_usdc=100.0)
    state = RiskState(trading_day=trading_day_of(T0))
    state = record_fill_and_check(-55.0, state, config, T0)
    assert not state.suspended
    state = record_fill_and_check(-44.99, state, config, T0 + 1)
    assert not state.suspended
    state = record_fill_and_check(-0.01, state, config, T0 + 2)
    assert state.suspended and state.suspended_at == T0 + 2

    # No trade executes while suspended (orchestrator-level).
    markets = [
        make_snapshot("hot1", "Will reactor alpha come online", 0.10),
        make_snapshot("hot2", "Will reactor beta come online", 0.10),
    ]
    fixture = write_corpus(tmp_path, markets)
    cfg = terminal_config(
        tmp_path,
        fixture,
        sim_noise_sigma=0.05,
        daily_loss_limit_usdc=5.0,
        agents_per_market=10,
        min_agents=3,
    )
    terminal = Terminal(cfg, time_source=VirtualTime(T0))
    terminal.provider.truths = {
        "Will reactor alpha come online": 0.9,
        "Will reactor beta come online": 0.9,
    }
    report = run(terminal.run_cycle())
    assert report.trades_executed >= 2
    run(
        terminal.submit_command(
            ControlCommand(
                kind="resolve_market",
                issued_by="acceptance",
                issued_at=T0 + 10,
                args={"market_id": "hot1", "outcome": "no"},
            )
        )
    )
    assert terminal.risk.suspended
    suspended_report = run(terminal.run_cycle())
    assert suspended_report.trades_executed == 0
    assert suspended_report.markets_fetched == 2
    terminal.close()

    # Sizes never exceed MAX_POSITION_USDC over 10^5 randomized calls.
    rng = np.random.default_rng(11)
    cap_config = RiskConfig(
        kelly_multiplier=0.25,
        max_position_usdc=10.0,
        daily_loss_limit_usdc=100.0,
        bankroll_usdc=1000.0,
    )
    f_stars = rng.uniform(-1.5, 1.5, 100_000)
    for f_star in f_stars:
        assert 0.0 <= position_size(float(f_star), cap_config) <= 10.0
    # And through the full Kelly path with random (p, b):
    ps_grid = rng.uniform(0.001, 0.999, 10_000)
    bs_grid = rng.uniform(0.01, 20.0, 10_000)
    for p, b in zip(ps_grid, bs_grid):
        size = position_size(kelly_fraction(Probability(p), NetOdds(b)), cap_config)
        assert 0.0 <= size <= 10.0


# ---------------------------------------------------------------------------
# Cycle pacing
# ---------------------------------------------------------------------------


@criterion("cycle-pacing")
def test_cycle_pacing(tmp_path):
    # 100 cycles over a 200-market fixture with a fast simulated provider.
    # The fixed-rate scheduler runs on the injected time source; the
    # 100-cycle check uses virtual time (100 real 5 s cycles would take
    # ~8 minutes), and a real-clock smoke run covers the sleeping path.
    markets, *_ = _scanner_corpus()
    fixture = write_corpus(tmp_path, markets, name="pacing.jsonl")
    cfg = terminal_config(
        tmp_path,
        fixture,
        data_dir=str(tmp_path / "pacing_data"),
        cycles=100,
        agents_per_market=5,
        min_agents=2,
        max_in_flight=8,
        scan_interval_secs=5.0,
    )
    terminal = Terminal(cfg, time_source=VirtualTime(T0))
    reports = run(terminal.run_loop())
    assert len(reports) == 100
    starts = [r.started_at for r in reports]
    gaps = [(b - a) / 1000.0 for a, b in zip(starts, starts[1:])]
    assert all(abs(gap - 5.0) <= 0.1 for gap in gaps), gaps[:5]
    assert terminal.engine.stats.max_observed_in_flight <= cfg.max_in_flight
    terminal.close()

    # Real-clock smoke: same scheduler against the wall clock, with real
    # provider latency to drive true concurrency under the semaphore.
    fixture_small = write_corpus(tmp_path, small_corpus(n=4), name="pacing_small.jsonl")
    cfg_real = terminal_config(
        tmp_path,
        fixture_small,
        data_dir=str(tmp_path / "pacing_real"),
        virtual_time=False,
        cycles=5,
        scan_interval_secs=0.5,
        agents_per_market=8,
        min_agents=2,
        max_in_flight=4,
        sim_latency_secs=0.005,
    )
    terminal = Terminal(cfg_real, time_source=RealTime())
    reports = run(terminal.run_loop())
    starts = [r.started_at for r in reports]
    gaps = [(b - a) / 1000.0 for a, b in zip(starts, starts[1:])]
    assert all(abs(gap - 0.5) <= 0.1 for gap in gaps), gaps
    assert 2 <= terminal.engine.stats.max_observed_in_flight <= 4
    terminal.close()
