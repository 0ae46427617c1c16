"""WebSocket front door for teleop sessions, plus episode browsing.

Message protocol on ``/session/{sid}`` (JSON text records):

  client -> server
    {"type": "input", "left": {dx, dy, dz, droll, dpitch, dyaw,
                               gripper_width, suction_toggle_edge},
                      "right": {...},
     "record_control": {"kind": "start", "task_id": ..., "instruction": ...}
                     | {"kind": "stop", "save": true|false}
                     | {"kind": "mark_subtask", "text": ...}}
    {"type": "ping"}

  server -> client
    {"type": "ack", "coalesced": ..., "suction": {"left": ..., "right": ...},
     "recording": {...}, "snapshot": {...}}     (acks carry a snapshot)
    {"type": "snapshot", ...}                    (viewer stream)
    {"type": "error", "message": ...}

Two stepping modes. ``lockstep`` advances the scene exactly once per
driver input message, which makes a scripted client fully deterministic;
realtime mode ticks on a wall-clock thread at the collection rate. One
driver seat per session; any number of viewers.

The service also serves recorded episodes (GET /episodes,
GET /episodes/{name}) and the operator console bundle under /ui when a
built frontend directory is supplied.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, PlainTextResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from .episodes import list_episode_files, read_episode
from .protocol import Channel
from .scene import Scene, load_scene
from .teleop import SessionClosed, TeleopSession, parse_input

PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>vacgrip</title></head>
<body><h1>vacgrip teleop service</h1>
<p>No operator console bundle is installed. Connect a WebSocket client to
<code>/session/{id}</code> or build the frontend and serve it with
<code>--ui-dir</code>.</p></body></html>
"""


class SessionHub:
    """Sessions by id, each owning one scene and at most one driver seat."""

    def __init__(
        self, scene_factory, episodes_dir, rate_hz, lockstep: bool,
        confirm_timeout_s: float = 0.2,
    ):
        self.scene_factory = scene_factory
        self.episodes_dir = episodes_dir
        self.rate_hz = rate_hz
        self.lockstep = lockstep
        self.confirm_timeout_s = confirm_timeout_s
        self.sessions: dict[str, TeleopSession] = {}
        self.drivers: dict[str, bool] = {}
        self._threads: dict[str, threading.Thread] = {}
        self._running = True
        self._lock = threading.Lock()

    def get(self, sid: str) -> TeleopSession:
        with self._lock:
            if sid not in self.sessions:
                session = TeleopSession(
                    self.scene_factory(),
                    episodes_dir=self.episodes_dir,
                    rate_hz=self.rate_hz,
                    confirm_timeout_s=self.confirm_timeout_s,
                )
                self.sessions[sid] = session
                if not self.lockstep:
                    thread = threading.Thread(
                        target=self._run_session, args=(sid, session), daemon=True
                    )
                    self._threads[sid] = thread
                    thread.start()
            return self.sessions[sid]

    def _run_session(self, sid: str, session: TeleopSession):
        period = session.dt
        next_tick = time.monotonic()
        while self._running and not session.closed:
            session.tick()
            next_tick += period
            delay = next_tick - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_tick = time.monotonic()

    def claim_driver(self, sid: str) -> bool:
        with self._lock:
            if self.drivers.get(sid):
                return False
            self.drivers[sid] = True
            return True

    def release_driver(self, sid: str):
        with self._lock:
            self.drivers[sid] = False

    def shutdown(self):
        self._running = False
        for session in self.sessions.values():
            session.close()


def create_app(
    scene_source: str | Path | Scene,
    episodes_dir: str | Path | None = None,
    rate_hz: float | None = None,
    lockstep: bool = False,
    ui_dir: str | Path | None = None,
    confirm_timeout_s: float = 0.2,
) -> FastAPI:
    if isinstance(scene_source, Scene):
        template = json.dumps(scene_source.to_dict())
        scene_factory = lambda: Scene.from_dict(json.loads(template))  # noqa: E731
    else:
        scene_factory = lambda: load_scene(scene_source)  # noqa: E731

    hub = SessionHub(scene_factory, episodes_dir, rate_hz, lockstep, confirm_timeout_s)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        hub.shutdown()

    app = FastAPI(title="vacgrip teleop service", lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/session/{sid}")
    async def session_socket(ws: WebSocket, sid: str, role: str = "driver"):
        await ws.accept()
        session = hub.get(sid)
        driving = role == "driver"
        if driving and not hub.claim_driver(sid):
            await ws.send_json({"type": "error", "message": "driver seat taken"})
            await ws.close(code=4409)
            return
        session.client_count += 1
        snapshots = None
        pump_task = None
        try:
            if not hub.lockstep or not driving:
                snapshots = session.subscribe()
                pump_task = asyncio.create_task(_pump_snapshots(ws, snapshots))
            await ws.send_json({"type": "hello", "lockstep": hub.lockstep, "role": role})
            while True:
                msg = await ws.receive_json()
                kind = msg.get("type")
                if kind == "ping":
                    await ws.send_json({"type": "pong"})
                    continue
                if kind != "input":
                    await ws.send_json(
                        {"type": "error", "message": f"unknown message type {kind!r}"}
                    )
                    continue
                if not driving:
                    await ws.send_json(
                        {"type": "error", "message": "viewer connections cannot drive"}
                    )
                    continue
                try:
                    ack = session.apply_input(parse_input(msg))
                except SessionClosed:
                    await ws.send_json({"type": "error", "message": "session closed"})
                    break
                if hub.lockstep:
                    session.tick()
                    ack["suction"] = {
                        "left": session.driver.suction_commanded(Channel.LEFT),
                        "right": session.driver.suction_commanded(Channel.RIGHT),
                    }
                snap = session.snapshot()
                ack["recording"] = snap["recording"]
                ack["snapshot"] = snap
                ack["last_saved"] = session.last_saved
                await ws.send_json(ack)
        except WebSocketDisconnect:
            pass
        finally:
            session.client_count -= 1
            if pump_task is not None:
                pump_task.cancel()
            if snapshots is not None:
                session.unsubscribe(snapshots)
            if driving:
                hub.release_driver(sid)

    async def _pump_snapshots(ws: WebSocket, q):
        # Polling keeps this task cancellable; a blocking q.get would pin
        # an executor thread past connection teardown.
        import queue as _queue

        while True:
            try:
                snap = q.get_nowait()
            except _queue.Empty:
                await asyncio.sleep(0.02)
                continue
            await ws.send_json(snap)

    @app.get("/episodes")
    def episodes_index():
        if episodes_dir is None:
            return []
        out = []
        for path in list_episode_files(episodes_dir):
            try:
                ep = read_episode(path)
            except Exception:
                continue
            out.append(
                {
                    "name": path.name,
                    "task_id": ep.task_id,
                    "instruction": ep.instruction,
                    "steps": len(ep),
                    "rate_hz": ep.rate_hz,
                }
            )
        return out

    @app.get("/episodes/{name}")
    def episode_file(name: str):
        if episodes_dir is None:
            raise HTTPException(404, "no episode directory configured")
        path = Path(episodes_dir) / name
        if not path.name == name or not path.exists():
            raise HTTPException(404, f"no episode named {name}")
        return PlainTextResponse(path.read_text(encoding="utf-8"))

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse("/ui/")

    else:

        @app.get("/")
        def root_placeholder():
            return HTMLResponse(PLACEHOLDER_PAGE)

    return app
