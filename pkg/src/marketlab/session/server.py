"""WebSocket session server.

One sequencer task owns the engine and drives the period clock;
connection handlers only validate JSON, stamp arrival times and enqueue.
Participants connect to ``/ws``, send a join, then one order per period;
the experimenter's dashboard connects with ``?role=observer`` and
additionally receives the live decoupling feed.  The feed ensemble runs
in a worker thread off a state snapshot so a slow computation delays its
own message, never the period barrier.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from pathlib import Path
from typing import Awaitable, Callable

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from ..game import UP
from ..slaved import SlavedEnsemble
from .config import SessionConfig
from .engine import ALL, OBSERVERS, PARTICIPANTS, SessionEngine
from .log import SessionLog

logger = logging.getLogger(__name__)


class Clock:
    """Wall clock; tests may substitute something faster."""

    def now(self) -> float:
        return time.time()

    async def sleep(self, seconds: float) -> None:
        await asyncio.sleep(seconds)


class _Connection:
    _next_id = 0

    def __init__(self, websocket: WebSocket, role: str):
        self.websocket = websocket
        self.role = role
        self.id = f"conn-{_Connection._next_id}"
        _Connection._next_id += 1
        self.alive = True


class SessionController:
    """Shared state between the connection handlers and the sequencer."""

    def __init__(self, cfg: SessionConfig, clock: Clock | None = None, log: SessionLog | None = None):
        self.cfg = cfg
        self.clock = clock or Clock()
        self.engine = SessionEngine(cfg, log)
        self.queue: asyncio.Queue = asyncio.Queue()
        self.connections: dict[str, _Connection] = {}
        self.feed = SlavedEnsemble(cfg.live_delta_d) if cfg.live_delta_d else None
        self.done = asyncio.Event()
        self._feed_queue: asyncio.Queue = asyncio.Queue()
        self._feed_worker: asyncio.Task | None = None

    # -- connection side -------------------------------------------------

    async def register(self, websocket: WebSocket, role: str) -> _Connection:
        conn = _Connection(websocket, role)
        self.connections[conn.id] = conn
        return conn

    def enqueue(self, conn: _Connection, raw: str) -> None:
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            msg = None
        self.queue.put_nowait((conn, msg, self.clock.now()))

    def disconnected(self, conn: _Connection) -> None:
        conn.alive = False
        self.connections.pop(conn.id, None)
        self.engine.disconnect(conn.id, self.clock.now())

    # -- delivery ----------------------------------------------------------

    async def _send(self, conn: _Connection, message: dict) -> None:
        if not conn.alive:
            return
        try:
            await conn.websocket.send_text(json.dumps(message))
        except Exception:
            conn.alive = False

    async def deliver(self, outbox) -> None:
        for target, message in outbox:
            if target == ALL:
                conns = list(self.connections.values())
            elif target == PARTICIPANTS:
                conns = [c for c in self.connections.values() if c.role == "participant"]
            elif target == OBSERVERS:
                conns = [c for c in self.connections.values() if c.role == "observer"]
            else:
                conn = self.connections.get(target)
                conns = [conn] if conn else []
            for conn in conns:
                await self._send(conn, message)

    # -- observer feed -----------------------------------------------------

    def _schedule_feed(self, period: int, bit: int, log_return: float) -> None:
        """Queue one closed period for the feed worker.

        A single worker consumes the queue in period order, so the
        ensemble always sees bits in sequence even when periods close in
        quick succession; under load the feed simply lags.
        """
        if self.feed is None:
            return
        if self._feed_worker is None:
            self._feed_worker = asyncio.create_task(self._run_feed_worker())
        self._feed_queue.put_nowait((period, bit, log_return))

    async def _run_feed_worker(self) -> None:
        while True:
            item = await self._feed_queue.get()
            if item is None:
                return
            period, bit, log_return = item

            def compute():
                self.feed.observe(bit, log_return)
                if not self.feed.warmed_up:
                    return None
                return self.feed.snapshot()

            snap = await asyncio.to_thread(compute)
            if snap is None:
                continue
            d_plus, d_minus = snap
            delta = abs(d_plus - d_minus)
            prediction = None
            if delta > self.cfg.feed_threshold:
                prediction = "up" if d_plus > d_minus else "down"
            payload = {
                "period": period,
                "d_plus": d_plus,
                "d_minus": d_minus,
                "delta_d": delta,
                "prediction": prediction,
            }
            self.engine.log.append(
                {"ts": self.clock.now(), "event": "delta_d", **payload}
            )
            await self.deliver([(OBSERVERS, {"type": "delta_d", **payload})])

    # -- sequencer ---------------------------------------------------------

    async def run_session(self) -> SessionLog:
        """Drive the whole session: lobby, periods, settlement."""
        engine = self.engine
        clock = self.clock
        engine.start(clock.now())
        while not engine.ready:
            conn, msg, ts = await self.queue.get()
            await self.deliver(engine.handle_message(conn.id, msg, ts))
        for _ in range(self.cfg.periods):
            await self.deliver(engine.open_period(clock.now()))
            deadline = engine.deadline
            while True:
                if self.cfg.close_on_full_book and engine.all_ordered:
                    break
                remaining = deadline - clock.now()
                if remaining <= 0:
                    break
                try:
                    conn, msg, ts = await asyncio.wait_for(
                        self.queue.get(), timeout=remaining
                    )
                except asyncio.TimeoutError:
                    break
                await self.deliver(engine.handle_message(conn.id, msg, ts))
            outbox, info = engine.close_period(clock.now())
            await self.deliver(outbox)
            self._schedule_feed(info["period"], info["bit"], info["log_return"])
        if self._feed_worker is not None:
            self._feed_queue.put_nowait(None)
            await self._feed_worker
        await self.deliver(engine.settle(clock.now()))
        self.done.set()
        return engine.log


def create_app(controller: SessionController, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI()

    @app.websocket("/ws")
    async def websocket_endpoint(websocket: WebSocket):
        role = websocket.query_params.get("role", "participant")
        if role not in ("participant", "observer"):
            role = "participant"
        await websocket.accept()
        conn = await controller.register(websocket, role)
        try:
            while True:
                text = await websocket.receive_text()
                controller.enqueue(conn, text)
        except WebSocketDisconnect:
            controller.disconnected(conn)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")
    return app


async def serve_session(
    cfg: SessionConfig,
    host: str = "127.0.0.1",
    port: int = 0,
    static_dir: str | Path | None = None,
    log_sink=None,
    clock: Clock | None = None,
    on_port: Callable[[int], None] | None = None,
) -> SessionLog:
    """Run one complete session over real sockets and return its log.

    Binds, announces the bound port through ``on_port`` (useful with
    ``port=0``), runs the session to settlement, then shuts the server
    down.
    """
    import uvicorn

    controller = SessionController(cfg, clock=clock, log=SessionLog(log_sink))
    app = create_app(controller, static_dir)
    config = uvicorn.Config(
        app, host=host, port=port, log_level="warning", ws="websockets-sansio"
    )
    server = uvicorn.Server(config)
    server_task = asyncio.create_task(server.serve())
    while not server.started:
        if server_task.done():
            server_task.result()
            raise RuntimeError("server failed to start")
        await asyncio.sleep(0.01)
    bound_port = server.servers[0].sockets[0].getsockname()[1]
    if on_port is not None:
        on_port(bound_port)
    logger.info("session server listening on %s:%d", host, bound_port)
    try:
        log = await controller.run_session()
        # Give the final messages a moment to flush before teardown.
        await asyncio.sleep(0.05)
    finally:
        server.should_exit = True
        await server_task
    return log
