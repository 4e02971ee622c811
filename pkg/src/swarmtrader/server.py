"""REST + WebSocket control plane over a running Terminal.

Read endpoints are pure views of terminal state; POST /control is the
single mutation path (validate -> persist -> apply -> return new state).
WebSocket clients get a full state snapshot frame on connect, then the
live tail with per-connection seq plus the global event id, so the
dashboard can detect gaps and re-sync over REST. Slow clients are
disconnected when their buffer fills rather than allowed to stall the
scan loop.

Auth is a static bearer token: control always requires it when
configured; reads require it only when OPEN_READS is off.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Any

from fastapi import Depends, FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .errors import ValidationError
from .orchestrator import ControlCommand, Terminal

logger = logging.getLogger(__name__)


def _token_of(request_headers) -> str | None:
    auth = request_headers.get("authorization", "")
    if auth.lower().startswith("bearer "):
        return auth[7:].strip()
    return request_headers.get("x-api-token")


def build_app(terminal: Terminal) -> FastAPI:
    app = FastAPI(title="swarmtrader", docs_url=None, redoc_url=None)

    def auth_check(request: Request, control: bool = False) -> str:
        """Static-token scheme; returns the operator identity."""
        token = terminal.config.api_token
        presented = _token_of(request.headers)
        if control:
            if token and presented != token:
                raise HTTPException(status_code=401, detail="control requires a valid token")
            return "operator" if token else "anonymous"
        if not terminal.config.open_reads and token and presented != token:
            raise HTTPException(status_code=401, detail="reads require a valid token")
        return "operator" if presented == token and token else "anonymous"

    def read_guard(request: Request) -> str:
        return auth_check(request, control=False)

    def control_guard(request: Request) -> str:
        return auth_check(request, control=True)

    @app.get("/markets")
    def get_markets(_: str = Depends(read_guard)) -> list[dict]:
        return terminal.markets_view()

    @app.get("/consensus")
    def get_consensus(_: str = Depends(read_guard)) -> list[dict]:
        return terminal.consensus_view()

    @app.get("/signals")
    def get_signals(_: str = Depends(read_guard)) -> list[dict]:
        return terminal.signals_view()

    @app.get("/trades")
    def get_trades(_: str = Depends(read_guard)) -> list[dict]:
        return terminal.trades_view()

    @app.get("/pnl")
    def get_pnl(_: str = Depends(read_guard)) -> dict:
        return terminal.pnl_view()

    @app.get("/agents")
    def get_agents(_: str = Depends(read_guard)) -> dict:
        return terminal.agents_view()

    @app.get("/risk")
    def get_risk(_: str = Depends(read_guard)) -> dict:
        return terminal.risk_view()

    @app.get("/state")
    def get_state(_: str = Depends(read_guard)) -> dict:
        return terminal.state_snapshot()

    @app.post("/control")
    async def post_control(body: dict, operator: str = Depends(control_guard)) -> Any:
        kind = body.get("kind")
        args = body.get("args", {}) or {}
        if not isinstance(args, dict):
            raise HTTPException(status_code=400, detail="args must be an object")
        command = ControlCommand(
            kind=str(kind),
            issued_by=operator,
            issued_at=terminal.ts.now_ms(),
            args=args,
        )
        try:
            state = await terminal.submit_command(command)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return JSONResponse(state)

    @app.websocket("/ws")
    async def ws_stream(websocket: WebSocket) -> None:
        token = terminal.config.api_token
        if not terminal.config.open_reads and token:
            presented = websocket.query_params.get("token") or _token_of(websocket.headers)
            if presented != token:
                await websocket.close(code=4401)
                return
        await websocket.accept()
        handle = terminal.hub.attach()
        seq = 0
        try:
            # State snapshot first, then the live tail.
            seq += 1
            await websocket.send_json(
                {
                    "kind": "state_snapshot",
                    "payload": terminal.state_snapshot(),
                    "event_id": terminal.hub.last_event_id,
                    "seq": seq,
                }
            )
            while True:
                frame = await handle.queue.get()
                seq += 1
                await websocket.send_json(frame.to_wire(seq))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            terminal.hub.detach(handle)

    return app


async def serve(terminal: Terminal, app: FastAPI | None = None) -> "asyncio.Task":
    """Run uvicorn inside the current event loop; returns the server task."""
    import uvicorn

    host, _, port = terminal.config.listen_addr.partition(":")
    config = uvicorn.Config(
        app or build_app(terminal),
        host=host or "127.0.0.1",
        port=int(port or 8800),
        log_level="warning",
        lifespan="off",
    )
    server = uvicorn.Server(config)
    task = asyncio.create_task(server.serve())
    # Give uvicorn a beat to bind before the caller proceeds.
    while not server.started and not task.done():
        await asyncio.sleep(0.02)
    task.server = server  # type: ignore[attr-defined]
    return task
