"""Durable append-only storage with replay support.

One line-delimited JSON file per table under a data directory; every
record gets a strictly increasing per-table sequence number and is
flushed and fsynced before append() returns. Records are never mutated:
corrections are new records. The trades table doubles as the append-only
trade log that replay treats as the source of truth.

A torn final line (crash mid-write) is detected on open and ignored;
everything before it is intact because each append is a single
write+fsync of one full line.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Callable, Iterator

from .errors import StorageError, ValidationError

TABLES = ("snapshots", "predictions", "consensus", "signals", "trades", "risk_days", "cycles", "commands")


def _encode(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class Store:
    """Embedded single-node store: many readers, one serialized writer per table."""

    def __init__(self, data_dir: str | Path, fsync: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.fsync = fsync
        self._seq: dict[str, int] = {}
        self._files: dict[str, object] = {}
        for table in TABLES:
            self._seq[table] = self._recover_seq(table)

    def _path(self, table: str) -> Path:
        return self.data_dir / f"{table}.jsonl"

    def _archive_path(self, table: str) -> Path:
        return self.data_dir / f"{table}.archive.jsonl"

    def _recover_seq(self, table: str) -> int:
        last = 0
        for rec in self._iter_file(self._archive_path(table)):
            last = max(last, rec["seq"])
        for rec in self._iter_table(table):
            last = max(last, rec["seq"])
        return last

    def _check_table(self, table: str) -> None:
        if table not in TABLES:
            raise StorageError(f"unknown table: {table}")

    def append(self, table: str, record: dict, validate: Callable[[dict], None] | None = None) -> int:
        """Durably append one record; returns its sequence number.

        The record must be JSON-serializable; `validate` runs before
        anything touches disk so invalid records are rejected unwritten.
        """
        self._check_table(table)
        if validate is not None:
            validate(record)
        seq = self._seq[table] + 1
        row = dict(record)
        row["seq"] = seq
        line = _encode(row) + "\n"
        try:
            fh = self._files.get(table)
            if fh is None:
                fh = open(self._path(table), "a", encoding="utf-8")
                self._files[table] = fh
            fh.write(line)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"append to {table} failed: {exc}") from exc
        self._seq[table] = seq
        return seq

    def _iter_table(self, table: str) -> Iterator[dict]:
        yield from self._iter_file(self._path(table))

    @staticmethod
    def _iter_file(path: Path) -> Iterator[dict]:
        if not path.exists():
            return
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                if not raw.endswith("\n"):
                    break  # torn tail from a crash mid-write
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    yield json.loads(raw)
                except json.JSONDecodeError:
                    break  # corrupt tail; stop at last good record

    def query(
        self,
        table: str,
        start_ms: int | None = None,
        end_ms: int | None = None,
        market_id: str | None = None,
        source: str | None = None,
        from_seq: int = 0,
        time_key: str = "ts",
    ) -> list[dict]:
        """Matching records in sequence order."""
        self._check_table(table)
        out = []
        for rec in self._iter_table(table):
            if rec["seq"] <= from_seq:
                continue
            ts = rec.get(time_key)
            if start_ms is not None and (ts is None or ts < start_ms):
                continue
            if end_ms is not None and (ts is None or ts > end_ms):
                continue
            if market_id is not None and rec.get("market_id") != market_id:
                continue
            if source is not None and rec.get("source") != source:
                continue
            out.append(rec)
        return out

    def replay(self, table: str, from_seq: int = 0) -> Iterator[dict]:
        """Event stream for state reconstruction, in sequence order.

        Includes compaction archives: replay is exact regardless of how
        much of the table has been archived (archived seq < active seq
        always, since only old records move).
        """
        self._check_table(table)
        for rec in self._iter_file(self._archive_path(table)):
            if rec["seq"] > from_seq:
                yield rec
        for rec in self._iter_table(table):
            if rec["seq"] > from_seq:
                yield rec

    def compact(self, table: str, should_archive: Callable[[dict], bool]) -> tuple[int, int]:
        """Relocate matching records into <table>.archive.jsonl.

        Records are moved verbatim, never rewritten (append-only
        discipline); seq numbering is untouched and new appends continue
        after the highest seq ever issued. Returns (kept, archived).
        """
        self._check_table(table)
        active = list(self._iter_table(table))
        keep = [rec for rec in active if not should_archive(rec)]
        move = [rec for rec in active if should_archive(rec)]
        if not move:
            return len(keep), 0
        fh = self._files.pop(table, None)
        if fh is not None:
            fh.close()  # type: ignore[union-attr]
        try:
            with open(self._archive_path(table), "a", encoding="utf-8") as archive:
                for rec in move:
                    archive.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
                archive.flush()
                if self.fsync:
                    os.fsync(archive.fileno())
            tmp_path = self._path(table).with_suffix(".jsonl.tmp")
            with open(tmp_path, "w", encoding="utf-8") as fresh:
                for rec in keep:
                    fresh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
                fresh.flush()
                if self.fsync:
                    os.fsync(fresh.fileno())
            os.replace(tmp_path, self._path(table))
        except OSError as exc:
            raise StorageError(f"compaction of {table} failed: {exc}") from exc
        return len(keep), len(move)

    def last_seq(self, table: str) -> int:
        self._check_table(table)
        return self._seq[table]

    def export(self, table: str) -> str:
        """The table's raw line-delimited JSON, for offline analysis."""
        self._check_table(table)
        path = self._path(table)
        return path.read_text() if path.exists() else ""

    def close(self) -> None:
        for fh in self._files.values():
            fh.close()
        self._files.clear()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def validate_probability_fields(record: dict) -> None:
    """Reject records whose probability-like fields stray outside [0, 1]."""
    for key in ("probability", "p_swarm", "p_combined", "p_market", "yes_price", "fill_price", "f_t"):
        if key in record and record[key] is not None:
            v = float(record[key])
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{key} out of range in record: {v}")
