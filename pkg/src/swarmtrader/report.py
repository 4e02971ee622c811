"""Forecast evaluation reports: JSON summary, calibration CSV, figures.

The evaluate path joins persisted consensus/prediction records with
resolution events (resolve_market control commands), scores them with
the proper scoring rules, and writes a JSON report plus a calibration
CSV; matplotlib renders the reliability diagram and the equity curve to
PNG files alongside the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .domain import Probability
from .errors import EmptyEvalError
from .evaluation import (
    EXPERT_BRIER_BAND,
    CalibrationTable,
    ForecastRecord,
    brier_score,
    log_loss,
    per_agent_scores,
    reliability_bins,
)
from .persistence import Store

SOURCES = ("swarm", "combined", "market", "agent")


def resolutions_from_store(store: Store) -> dict[str, str]:
    """market_id -> outcome ('yes'/'no') from resolve_market commands."""
    outcomes: dict[str, str] = {}
    for rec in store.replay("commands"):
        if rec.get("kind") == "resolve_market":
            args = rec.get("args", {})
            if args.get("market_id") and args.get("outcome") in ("yes", "no"):
                outcomes[args["market_id"]] = args["outcome"]
    return outcomes


def forecast_records(
    store: Store,
    source: str,
    start_ms: int | None = None,
    end_ms: int | None = None,
) -> list[ForecastRecord]:
    """Join decision-time forecasts with resolved outcomes.

    Forecasts are the persisted per-cycle snapshots, never recomputed
    later; every evaluated cycle of a resolved market contributes one
    record.
    """
    if source not in SOURCES:
        raise EmptyEvalError(f"unknown source: {source} (use one of {SOURCES})")
    outcomes = resolutions_from_store(store)
    records: list[ForecastRecord] = []
    if source == "agent":
        for rec in store.query("predictions", start_ms=start_ms, end_ms=end_ms):
            outcome = outcomes.get(rec["market_id"])
            if outcome is None:
                continue
            records.append(
                ForecastRecord(
                    market_id=rec["market_id"],
                    f_t=Probability(rec["probability"]),
                    o_t=1 if outcome == "yes" else 0,
                    source=f"agent:{rec['persona_id']}",
                )
            )
        return records
    key = {"swarm": "p_swarm", "combined": "p_combined", "market": "p_market"}[source]
    for rec in store.query("consensus", start_ms=start_ms, end_ms=end_ms):
        outcome = outcomes.get(rec["market_id"])
        if outcome is None:
            continue
        records.append(
            ForecastRecord(
                market_id=rec["market_id"],
                f_t=Probability(rec[key]),
                o_t=1 if outcome == "yes" else 0,
                source=source,
            )
        )
    return records


def build_report(records: list[ForecastRecord], source: str, n_bins: int = 10) -> dict:
    if not records:
        raise EmptyEvalError(f"no resolved forecast records for source {source!r}")
    table = reliability_bins(records, n_bins=n_bins)
    report = {
        "source": source,
        "n_records": len(records),
        "n_markets": len({r.market_id for r in records}),
        "brier_score": brier_score(records),
        "log_loss": log_loss(records),
        "expert_brier_band": list(EXPERT_BRIER_BAND),
        "bins": [
            {
                "lo": b.lo,
                "hi": b.hi,
                "mean_forecast": b.mean_forecast,
                "empirical_frequency": b.empirical_frequency,
                "count": b.count,
            }
            for b in table.bins
        ],
    }
    if source == "agent":
        report["per_agent"] = {
            persona: {"brier": s.brier, "log_loss": s.log_loss, "n": s.n}
            for persona, s in sorted(per_agent_scores(records).items())
        }
    return report


def write_calibration_csv(table: CalibrationTable, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "mean_forecast", "empirical_frequency", "count"])
        for b in table.bins:
            writer.writerow(
                [
                    f"{b.lo:.4f}",
                    f"{b.hi:.4f}",
                    "" if b.mean_forecast is None else f"{b.mean_forecast:.6f}",
                    "" if b.empirical_frequency is None else f"{b.empirical_frequency:.6f}",
                    b.count,
                ]
            )


def reliability_figure(table: CalibrationTable, path: Path, title: str = "Reliability") -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=1, label="perfect calibration")
    xs = [b.mean_forecast for b in table.bins if b.count > 0]
    ys = [b.empirical_frequency for b in table.bins if b.count > 0]
    sizes = [b.count for b in table.bins if b.count > 0]
    if xs:
        ax.plot(xs, ys, marker="o", color="tab:blue", label="observed")
        for x, y, n in zip(xs, ys, sizes):
            ax.annotate(str(n), (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("mean forecast probability")
    ax.set_ylabel("empirical outcome frequency")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def equity_figure(equity_curve, path: Path, title: str = "Equity curve") -> None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if equity_curve:
        xs = [point[0] for point in equity_curve]
        ys = [point[1] for point in equity_curve]
        ax.step(xs, ys, where="post", color="tab:green")
    ax.set_xlabel("time (ms since epoch)")
    ax.set_ylabel("bankroll (USDC)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run_evaluation(
    data_dir: str | Path,
    out_dir: str | Path,
    source: str = "combined",
    start_ms: int | None = None,
    end_ms: int | None = None,
    n_bins: int = 10,
    bankroll_usdc: float | None = None,
) -> dict:
    """The evaluate subcommand's engine: report.json + bins CSV + figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store = Store(data_dir, fsync=False)
    try:
        records = forecast_records(store, source, start_ms, end_ms)
        report = build_report(records, source, n_bins=n_bins)
        table = reliability_bins(records, n_bins=n_bins)
        write_calibration_csv(table, out / "calibration_bins.csv")
        reliability_figure(table, out / "reliability_diagram.png", title=f"Reliability ({source})")
        if bankroll_usdc is not None:
            from .execution import replay_ledger

            trades = list(store.replay("trades"))
            if trades:
                ledger = replay_ledger(trades, bankroll_usdc, start_ms=trades[0]["ts"])
                equity_figure(ledger.summary().equity_curve, out / "equity_curve.png")
                report["ledger"] = ledger.summary().to_record()
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return report
    finally:
        store.close()
