"""Process entry point and operational subcommands.

    swarmtrader run          start the scan loop (and control server)
    swarmtrader evaluate     score resolved forecasts; emit report + figures
    swarmtrader export       dump a persistence table as line-delimited JSON
    swarmtrader replay       rebuild ledger/risk state from the trade log
    swarmtrader compact      archive resolved-market records past a horizon
    swarmtrader check-config print the effective config including defaults

Every config key is settable three ways with ascending precedence:
config file (--config, flat KEY = value lines), environment variable,
CLI flag.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import signal
import sys
from datetime import datetime, timezone

from .config import AppConfig, load_config
from .errors import SwarmTraderError
from .orchestrator import Terminal, replay_summary
from .persistence import TABLES, Store

logger = logging.getLogger(__name__)

_FLAG_KEYS = [
    ("--market-source", "market_source", str),
    ("--min-volume-usdc", "min_volume_usdc", float),
    ("--min-liquidity-usdc", "min_liquidity_usdc", float),
    ("--scan-interval-secs", "scan_interval_secs", float),
    ("--max-markets-per-cycle", "max_markets_per_cycle", int),
    ("--agents-per-market", "agents_per_market", int),
    ("--max-in-flight", "max_in_flight", int),
    ("--cache-ttl-secs", "cache_ttl_secs", float),
    ("--persona-pool-path", "persona_pool_path", str),
    ("--min-ev", "min_ev", float),
    ("--max-stddev", "max_stddev", float),
    ("--weight-swarm", "weight_swarm", float),
    ("--min-agents", "min_agents", int),
    ("--kelly-fraction", "kelly_fraction", float),
    ("--max-position-usdc", "max_position_usdc", float),
    ("--daily-loss-limit-usdc", "daily_loss_limit_usdc", float),
    ("--bankroll-usdc", "bankroll_usdc", float),
    ("--trading-mode", "trading_mode", str),
    ("--fee-bps", "fee_bps", float),
    ("--slippage-bps", "slippage_bps", float),
    ("--negation-deviation-threshold", "negation_deviation_threshold", float),
    ("--partition-groups-path", "partition_groups_path", str),
    ("--js-priority-threshold", "js_priority_threshold", float),
    ("--cex-poll-interval-secs", "cex_poll_interval_secs", float),
    ("--latency-threshold", "latency_threshold", float),
    ("--strike-map-path", "strike_map_path", str),
    ("--vol-window-hours", "vol_window_hours", float),
    ("--cex-quote-url", "cex_quote_url", str),
    ("--cex-replay-path", "cex_replay_path", str),
    ("--listen-addr", "listen_addr", str),
    ("--api-token", "api_token", str),
    ("--ws-buffer-frames", "ws_buffer_frames", int),
    ("--data-dir", "data_dir", str),
    ("--provider", "provider", str),
    ("--sim-seed", "sim_seed", int),
    ("--sim-noise-sigma", "sim_noise_sigma", float),
    ("--sim-bias", "sim_bias", float),
    ("--sim-latency-secs", "sim_latency_secs", float),
    ("--price-basis", "price_basis", str),
    ("--cycles", "cycles", int),
]

_BOOL_FLAGS = [
    ("--virtual-time", "virtual_time"),
    ("--open-reads", "open_reads"),
    ("--fsync", "fsync"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="flat KEY = value config file")
    for flag, attr, typ in _FLAG_KEYS:
        parser.add_argument(flag, dest=attr, type=typ, default=None)
    for flag, attr in _BOOL_FLAGS:
        parser.add_argument(
            flag, dest=attr, default=None, type=lambda s: s.lower() in ("1", "true", "yes", "on")
        )


def _config_from_args(args: argparse.Namespace) -> AppConfig:
    overrides = {}
    for _, attr, _ in _FLAG_KEYS:
        overrides[attr] = getattr(args, attr, None)
    for _, attr in _BOOL_FLAGS:
        overrides[attr] = getattr(args, attr, None)
    return load_config(file_path=args.config, overrides=overrides)


def _parse_date_ms(raw: str | None) -> int | None:
    if raw is None:
        return None
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def cmd_check_config(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    for key, value in config.effective_items():
        print(f"{key} {_fmt(value)}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s %(message)s"
    )
    terminal = Terminal(config)

    async def main() -> None:
        server_task = None
        if not args.no_server:
            from .server import serve

            server_task = await serve(terminal)
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, terminal.stop)
            except (NotImplementedError, RuntimeError):
                pass
        try:
            await terminal.run_loop()
        finally:
            terminal.write_run_summary()
            if server_task is not None:
                server_task.server.should_exit = True  # type: ignore[attr-defined]
                try:
                    await asyncio.wait_for(server_task, timeout=5)
                except asyncio.TimeoutError:
                    server_task.cancel()

    try:
        asyncio.run(main())
    finally:
        terminal.close()
    summary = terminal.final_summary()
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    from .report import run_evaluation

    config = _config_from_args(args)
    report = run_evaluation(
        data_dir=config.data_dir,
        out_dir=args.out_dir,
        source=args.source,
        start_ms=_parse_date_ms(getattr(args, "from")),
        end_ms=_parse_date_ms(args.to),
        n_bins=args.bins,
        bankroll_usdc=config.bankroll_usdc,
    )
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    store = Store(config.data_dir, fsync=False)
    try:
        payload = store.export(args.table)
    finally:
        store.close()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    summary = replay_summary(config.data_dir, config)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_compact(args: argparse.Namespace) -> int:
    from .orchestrator import compact_store

    config = _config_from_args(args)
    summary = compact_store(config.data_dir, args.older_than_days)
    print(json.dumps(summary, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmtrader", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="start the scan loop and control server")
    _add_config_flags(p_run)
    p_run.add_argument("--no-server", action="store_true", help="run the loop without REST/WS")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="score resolved forecasts")
    _add_config_flags(p_eval)
    p_eval.add_argument("--from", dest="from", default=None, help="ISO date/time lower bound")
    p_eval.add_argument("--to", default=None, help="ISO date/time upper bound")
    p_eval.add_argument(
        "--source", default="combined", choices=["swarm", "combined", "market", "agent"]
    )
    p_eval.add_argument("--out-dir", default="./eval_out")
    p_eval.add_argument("--bins", type=int, default=10)
    p_eval.set_defaults(func=cmd_evaluate)

    p_export = sub.add_parser("export", help="dump a table as line-delimited JSON")
    _add_config_flags(p_export)
    p_export.add_argument("--table", required=True, choices=list(TABLES))
    p_export.add_argument("--out", default=None)
    p_export.set_defaults(func=cmd_export)

    p_replay = sub.add_parser("replay", help="rebuild state from the trade log")
    _add_config_flags(p_replay)
    p_replay.set_defaults(func=cmd_replay)

    p_compact = sub.add_parser(
        "compact", help="archive resolved-market records older than a horizon"
    )
    _add_config_flags(p_compact)
    p_compact.add_argument("--older-than-days", type=float, required=True)
    p_compact.set_defaults(func=cmd_compact)

    p_check = sub.add_parser("check-config", help="print the effective config")
    _add_config_flags(p_check)
    p_check.set_defaults(func=cmd_check_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SwarmTraderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
