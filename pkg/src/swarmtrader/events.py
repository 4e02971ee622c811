"""Event fan-out from the scan loop to WebSocket clients.

publish() never blocks and never awaits: frames go into bounded
per-client queues with put_nowait, and a client whose queue is full is
dropped rather than allowed to stall the pipeline. Frames carry a global
event id; the per-connection seq is stamped by the sender when frames
drain, so the dashboard can detect gaps and re-sync over REST.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger(__name__)

FRAME_KINDS = (
    "snapshot_batch",
    "consensus",
    "signal",
    "trade",
    "pnl_update",
    "log_line",
    "risk_state",
    "state_snapshot",
)


@dataclass(slots=True)
class EventFrame:
    kind: str
    payload: Any
    event_id: int

    def to_wire(self, seq: int) -> dict:
        return {"kind": self.kind, "payload": self.payload, "event_id": self.event_id, "seq": seq}


@dataclass
class ClientHandle:
    client_id: int
    queue: asyncio.Queue = field(default_factory=asyncio.Queue)
    dropped: bool = False


class EventHub:
    def __init__(self, buffer_frames: int = 256):
        self.buffer_frames = buffer_frames
        self._clients: dict[int, ClientHandle] = {}
        self._next_client = 0
        self._next_event = 0

    @property
    def client_count(self) -> int:
        return len(self._clients)

    @property
    def last_event_id(self) -> int:
        return self._next_event

    def attach(self) -> ClientHandle:
        self._next_client += 1
        handle = ClientHandle(
            client_id=self._next_client,
            queue=asyncio.Queue(maxsize=self.buffer_frames),
        )
        self._clients[handle.client_id] = handle
        return handle

    def detach(self, handle: ClientHandle) -> None:
        self._clients.pop(handle.client_id, None)

    def publish(self, kind: str, payload: Any) -> EventFrame:
        """Deliver to every connected client without blocking the caller."""
        if kind not in FRAME_KINDS:
            raise ValueError(f"unknown frame kind: {kind}")
        self._next_event += 1
        frame = EventFrame(kind=kind, payload=payload, event_id=self._next_event)
        for handle in list(self._clients.values()):
            try:
                handle.queue.put_nowait(frame)
            except asyncio.QueueFull:
                handle.dropped = True
                self.detach(handle)
                logger.warning(
                    "dropping slow websocket client %d (buffer of %d frames exceeded)",
                    handle.client_id,
                    self.buffer_frames,
                )
        return frame
