"""Injectable time: real wall clock or a virtual clock for deterministic runs.

The scan loop, cache, risk manager, and ledger all read time through a
TimeSource so seeded fixture runs are byte-reproducible and scheduler
arithmetic is testable without real sleeping. VirtualTime advances only
when slept on; compute between sleeps is instantaneous in virtual terms.
"""

from __future__ import annotations

import asyncio
import time
from typing import Protocol, runtime_checkable


@runtime_checkable
class TimeSource(Protocol):
    def now_ms(self) -> int: ...

    def monotonic(self) -> float: ...

    async def sleep(self, seconds: float) -> None: ...

    @property
    def is_virtual(self) -> bool: ...


class RealTime:
    is_virtual = False

    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def monotonic(self) -> float:
        return time.monotonic()

    async def sleep(self, seconds: float) -> None:
        await asyncio.sleep(max(seconds, 0.0))


class VirtualTime:
    """Logical clock starting at a fixed epoch; sleep() advances it."""

    is_virtual = True

    def __init__(self, start_ms: int = 1_700_000_000_000):
        self._now_ms = start_ms

    def now_ms(self) -> int:
        return self._now_ms

    def monotonic(self) -> float:
        return self._now_ms / 1000.0

    async def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._now_ms += int(round(seconds * 1000))
        # Yield so concurrently scheduled tasks still interleave.
        await asyncio.sleep(0)

    def advance_ms(self, delta_ms: int) -> None:
        self._now_ms += delta_ms
