import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from swarmtrader.analysis import SignalDirection, SignalKind
from swarmtrader.errors import (
    DegenerateVolError,
    ExpiredError,
    ParseError,
    SourceUnavailable,
    VolEstimateError,
)
from swarmtrader.latency import (
    MS_PER_HOUR,
    CexQuote,
    QuoteSource,
    StrikeContract,
    StrikeDirection,
    VolatilityEstimate,
    cex_implied_probability,
    latency_signal,
    realized_volatility,
    std_normal_cdf,
)

NOW = 1_700_000_000_000


def contract(strike=100.0, hours=100.0, direction=StrikeDirection.ABOVE):
    return StrikeContract(
        market_id="m-btc",
        symbol="BTC",
        strike=strike,
        expiry=NOW + int(hours * MS_PER_HOUR),
        direction=direction,
    )


def vol(sigma=0.01):
    return VolatilityEstimate(symbol="BTC", sigma_hourly=sigma, window_hours=24, n_samples=100)


def quadrature_phi(x: float) -> float:
    """Oracle: numerical integration of the standard normal density."""
    density = lambda t: math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
    val, _ = integrate.quad(density, -12.0, x, limit=200)
    return val


class TestStdNormalCdf:
    def test_symmetry_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    @given(st.floats(min_value=-8, max_value=8))
    def test_reflection_identity(self, x):
        assert std_normal_cdf(-x) == pytest.approx(1.0 - std_normal_cdf(x), abs=1e-12)

    def test_against_quadrature_oracle_at_one(self):
        assert std_normal_cdf(1.0) == pytest.approx(quadrature_phi(1.0), abs=1e-9)

    def test_against_quadrature_oracle_grid(self):
        for x in np.linspace(-8, 8, 81):
            assert std_normal_cdf(float(x)) == pytest.approx(
                quadrature_phi(float(x)), abs=1e-9
            )


class TestCexImpliedProbability:
    def test_at_the_money_half(self):
        q = CexQuote("BTC", 100.0, NOW)
        for sigma in (0.001, 0.01, 0.5):
            for hours in (1.0, 100.0, 10_000.0):
                p = cex_implied_probability(q, contract(hours=hours), vol(sigma), NOW)
                assert p == pytest.approx(0.5, abs=1e-12)

    def test_monte_carlo_oracle(self):
        # S=110, K=100, sigma=0.01/sqrt(h) -- paper-shape check: Phi(ln1.1/0.1)
        q = CexQuote("BTC", 110.0, NOW)
        analytic = cex_implied_probability(q, contract(hours=100.0), vol(0.01), NOW)
        rng = np.random.default_rng(7)
        z = rng.standard_normal(1_000_000)
        terminal = 110.0 * np.exp(0.01 * math.sqrt(100.0) * z)
        mc = float(np.mean(terminal > 100.0))
        assert float(analytic) == pytest.approx(mc, abs=0.005)
        assert float(analytic) == pytest.approx(std_normal_cdf(math.log(1.1) / 0.1), abs=1e-15)

    def test_below_is_complement(self):
        q = CexQuote("BTC", 110.0, NOW)
        above = cex_implied_probability(q, contract(), vol(), NOW)
        below = cex_implied_probability(
            q, contract(direction=StrikeDirection.BELOW), vol(), NOW
        )
        assert float(above) + float(below) == pytest.approx(1.0, abs=1e-15)

    def test_expired_contract(self):
        q = CexQuote("BTC", 110.0, NOW)
        with pytest.raises(ExpiredError):
            cex_implied_probability(q, contract(hours=-1.0), vol(), NOW)

    def test_degenerate_vol(self):
        q = CexQuote("BTC", 110.0, NOW)
        with pytest.raises(DegenerateVolError):
            cex_implied_probability(q, contract(), vol(0.0), NOW)
        p = cex_implied_probability(q, contract(), vol(0.0), NOW, allow_degenerate=True)
        assert p == 1.0
        q_low = CexQuote("BTC", 90.0, NOW)
        p = cex_implied_probability(q_low, contract(), vol(0.0), NOW, allow_degenerate=True)
        assert p == 0.0
        # at the money, sigma = 0 stays an error even with the flag
        q_atm = CexQuote("BTC", 100.0, NOW)
        with pytest.raises(DegenerateVolError):
            cex_implied_probability(q_atm, contract(), vol(0.0), NOW, allow_degenerate=True)

    @given(st.floats(min_value=90, max_value=120), st.floats(min_value=91, max_value=119))
    def test_monotone_in_spot_and_strike(self, s, k):
        v = vol(0.02)
        q_lo = CexQuote("BTC", s, NOW)
        q_hi = CexQuote("BTC", s + 5.0, NOW)
        c = contract(strike=k)
        assert cex_implied_probability(q_lo, c, v, NOW) <= cex_implied_probability(
            q_hi, c, v, NOW
        )
        c_hi = contract(strike=k + 5.0)
        assert cex_implied_probability(q_lo, c_hi, v, NOW) <= cex_implied_probability(
            q_lo, c, v, NOW
        )

    def test_short_expiry_limits(self):
        v = vol(0.01)
        q_up = CexQuote("BTC", 105.0, NOW)
        q_dn = CexQuote("BTC", 95.0, NOW)
        p_up = cex_implied_probability(q_up, contract(hours=0.0001), v, NOW)
        p_dn = cex_implied_probability(q_dn, contract(hours=0.0001), v, NOW)
        assert float(p_up) > 0.999
        assert float(p_dn) < 0.001


class TestRealizedVolatility:
    def test_constant_series(self):
        series = [(NOW + i * 60_000, 100.0) for i in range(100)]
        est = realized_volatility(series, window_hours=24.0)
        assert est.sigma_hourly == 0.0

    def test_gbm_recovery(self):
        # Driftless GBM with sigma* = 0.02 per sqrt-hour, one-minute sampling.
        sigma_true = 0.02
        dt_hours = 1.0 / 60.0
        rng = np.random.default_rng(42)
        steps = rng.standard_normal(10_000) * sigma_true * math.sqrt(dt_hours)
        log_prices = np.cumsum(steps)
        series = [
            (NOW + i * 60_000, float(100.0 * math.exp(lp)))
            for i, lp in enumerate(log_prices)
        ]
        est = realized_volatility(series, window_hours=1e9)
        assert est.sigma_hourly == pytest.approx(sigma_true, rel=0.05)
        assert est.n_samples == 10_000

    def test_single_sample_rejected(self):
        with pytest.raises(VolEstimateError):
            realized_volatility([(NOW, 100.0)], window_hours=24.0)

    def test_window_excludes_old_samples(self):
        series = [(NOW - int(48 * MS_PER_HOUR), 1.0), (NOW, 100.0)]
        with pytest.raises(VolEstimateError):
            realized_volatility(series, window_hours=1.0)


class TestLatencySignal:
    def test_no_gap_no_signal(self):
        assert latency_signal(0.6, 0.6, 0.1, "m", 0) is None

    def test_buy_yes(self):
        sig = latency_signal(0.80, 0.65, 0.10, "m", 3)
        assert sig is not None
        assert sig.kind is SignalKind.LATENCY
        assert sig.direction is SignalDirection.BUY_YES
        assert sig.magnitude == pytest.approx(0.15, abs=1e-12)

    def test_below_threshold(self):
        assert latency_signal(0.70, 0.65, 0.10, "m", 0) is None

    def test_buy_no(self):
        sig = latency_signal(0.40, 0.65, 0.10, "m", 0)
        assert sig is not None and sig.direction is SignalDirection.BUY_NO


class TestQuoteSource:
    def test_replay_ordering_and_stall(self, tmp_path):
        path = tmp_path / "quotes.jsonl"
        path.write_text(
            '{"symbol": "BTC", "spot": 100.0, "observed_at": 1}\n'
            '{"symbol": "BTC", "spot": 101.0, "observed_at": 2}\n'
        )
        src = QuoteSource(kind="fixture_file", replay_path=path)
        import asyncio

        async def poll3():
            return [await src.poll("BTC") for _ in range(3)]

        quotes = asyncio.get_event_loop_policy().new_event_loop().run_until_complete(poll3())
        assert [q.spot for q in quotes] == [100.0, 101.0, 101.0]

    def test_replay_missing_symbol(self, tmp_path):
        path = tmp_path / "quotes.jsonl"
        path.write_text('{"symbol": "BTC", "spot": 100.0, "observed_at": 1}\n')
        src = QuoteSource(kind="fixture_file", replay_path=path)
        import asyncio

        loop = asyncio.get_event_loop_policy().new_event_loop()
        with pytest.raises(SourceUnavailable):
            loop.run_until_complete(src.poll("ETH"))

    def test_bad_record_raises_parse_error(self, tmp_path):
        path = tmp_path / "quotes.jsonl"
        path.write_text('{"symbol": "BTC", "spot": -5, "observed_at": 1}\n')
        with pytest.raises(ParseError):
            QuoteSource(kind="fixture_file", replay_path=path)

    def test_http_poll_and_errors(self):
        import asyncio

        import httpx

        calls = {}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["url"] = str(request.url)
            if "DOWN" in str(request.url):
                return httpx.Response(503)
            return httpx.Response(200, json={"price": 123.5})

        src = QuoteSource(
            kind="http_api",
            url_template="https://cex.example/spot/{symbol}",
            transport=httpx.MockTransport(handler),
            clock=lambda: 777,
        )
        loop = asyncio.get_event_loop_policy().new_event_loop()
        quote = loop.run_until_complete(src.poll("BTC"))
        assert quote.spot == 123.5
        assert quote.observed_at == 777
        assert calls["url"].endswith("/spot/BTC")
        with pytest.raises(SourceUnavailable):
            loop.run_until_complete(src.poll("DOWN"))
