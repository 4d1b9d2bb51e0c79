"""Live teleoperation service: one wall-clock-paced simulation per session,
telemetry out and operator targets in over a WebSocket.

Protocol (JSON text frames):

    server -> client on connect:
        {"type": "hello", ...geometry and certified thresholds...}
    server -> client, >= 30 Hz:
        {"type": "state", "t", "x0", "slaves": [{"x", "v"}, ...],
         "links": [{"ij", "dist", "dist_delayed", "alive"}, ...],
         "energy": {"Vp", "V1", "V2", "bound"}, "f", "K"}
    server -> client at the end of the run:
        {"type": "end", "verdict": {...}}
    client -> server:
        {"type": "master", "x": [..], "t_client": ms}

The operator is the bounded disturbance of the theory: whatever the client
sends, the target passes through the saturated spring, so ||f|| <= f_bar
holds by construction. Malformed frames are dropped and counted. Commands
are logged with their simulation timestamps; replaying the log through the
batch engine reproduces the trace and the verdict exactly.
"""
from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from . import engine, monitor
from .engine import Scenario, ScenarioError

log = logging.getLogger("swarmlink.service")

FRAME_INTERVAL_S = 1.0 / 30.0
FAST_FORWARD_SLACK_S = 0.1


class LiveSession:
    """One simulation loop owning all state; network I/O talks to it only
    through queues (commands in, frames out)."""

    def __init__(self, sid: str, sc: Scenario, realtime: bool = True):
        self.id = sid
        self.scenario = sc
        self.sim = engine.Simulation(sc)
        self.realtime = realtime
        self.inbox: queue.Queue = queue.Queue()
        self.clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._lock = threading.Lock()
        self.loop: asyncio.AbstractEventLoop | None = None
        self.verdict: dict | None = None
        self.malformed = 0
        self.stop_requested = False
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name=f"session-{sid}")
        self._started = False

    # -- lifecycle ----------------------------------------------------------

    def ensure_started(self, loop: asyncio.AbstractEventLoop) -> None:
        with self._lock:
            self.loop = loop
            if not self._started:
                self._started = True
                self._thread.start()

    def request_stop(self) -> None:
        self.stop_requested = True

    def join(self, timeout: float | None = None) -> None:
        if self._started:
            self._thread.join(timeout)

    # -- client registry ----------------------------------------------------

    def add_client(self) -> tuple[int, asyncio.Queue]:
        q: asyncio.Queue = asyncio.Queue(maxsize=256)
        with self._lock:
            cid = self._next_client
            self._next_client += 1
            self.clients[cid] = q
        return cid, q

    def remove_client(self, cid: int) -> None:
        with self._lock:
            self.clients.pop(cid, None)

    def _broadcast(self, frame: dict) -> None:
        if self.loop is None:
            return
        text = json.dumps(frame)
        with self._lock:
            queues = list(self.clients.values())

        def deliver(q: asyncio.Queue) -> None:
            if q.full():           # slow client: drop its oldest frame
                try:
                    q.get_nowait()
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(text)

        for q in queues:
            self.loop.call_soon_threadsafe(deliver, q)

    # -- frames ---------------------------------------------------------

    def hello_frame(self) -> dict:
        sim, sc, p = self.sim, self.scenario, self.sim.params
        certified = sim.gains is not None
        return {
            "type": "hello",
            "session": self.id,
            "scenario": sc.name,
            "mode": sc.mode,
            "n_robots": sim.net.n_vertices,
            "n_dim": sim.n_dim,
            "edges": [list(e) for e in sim.net.edges],
            "h": sc.h,
            "duration_s": sc.duration_s,
            "r": p.r,
            "r_bar": p.r_bar,
            "kappa_eps": p.kappa * p.epsilon,
            "f_bar": sim.gains.f_bar if certified else sim.master.f_max,
            "bound": sim._v2_bound if certified else None,
        }

    def state_frame(self) -> dict:
        sim = self.sim
        row = max(sim.k - 1, 0)
        en = sim.live_energies()
        return {
            "type": "state",
            "t": float(row * sim.sc.h),
            "x0": sim.master.x0_at(sim.t).tolist()
            if not sim.master.is_force_program else sim.x[0].tolist(),
            "slaves": [{"x": sim.x[i].tolist(), "v": sim.v[i].tolist()}
                       for i in range(sim.net.n_vertices)],
            "links": sim.link_snapshot(),
            "energy": en,
            "f": sim._f[row].tolist(),
            "K": sim._K[row].tolist(),
        }

    # -- simulation loop ------------------------------------------------

    def _run(self) -> None:
        sim = self.sim
        start_wall = time.perf_counter()
        behind_logged = False
        next_frame_t = 0.0
        while not sim.finished and not self.stop_requested:
            try:
                while True:
                    sim.push_command(self.inbox.get_nowait())
            except queue.Empty:
                pass
            sim.step()
            if sim.t >= next_frame_t or sim.finished:
                self._broadcast(self.state_frame())
                next_frame_t = sim.t + FRAME_INTERVAL_S
            if self.realtime and not sim.finished:
                target = start_wall + sim.t
                now = time.perf_counter()
                if now < target:
                    time.sleep(target - now)
                    behind_logged = False
                elif now - target > FAST_FORWARD_SLACK_S and not behind_logged:
                    log.warning("session %s fell %.0f ms behind wall clock; "
                                "fast-forwarding", self.id,
                                1e3 * (now - target))
                    behind_logged = True
        tr = sim.trace()
        self.verdict = monitor.assert_run(tr, sim.net, sim.model, sim.params,
                                          sim.gains)
        self._broadcast({"type": "end", "verdict": self.verdict,
                         "malformed_frames": self.malformed})
        log.info("session %s finished: ok=%s", self.id, self.verdict["ok"])

    def command_log(self) -> list:
        return self.sim.master.command_log()


def _live_variant(sc: Scenario, mode: str | None, duration_s: float | None) -> Scenario:
    """Session scenario: optional mode/duration override, operator program
    forced to live (the client is the master)."""
    d = sc.to_dict()
    if mode is not None:
        d["mode"] = mode
    if duration_s is not None:
        d["duration_s"] = float(duration_s)
    m = dict(d.get("master", {}))
    if m.get("program", "static") == "force_replay":
        raise ScenarioError("force_replay scenarios cannot run live")
    m["program"] = "live"
    m.pop("points", None)
    m.pop("speeds", None)
    m.pop("commands", None)
    d["master"] = m
    return Scenario.from_dict(d)


def create_app(default_scenario: str = "live_delayed",
               frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="swarmlink teleoperation service")
    app.state.sessions = {}
    app.state.default_scenario = default_scenario

    @app.get("/scenarios")
    def scenarios() -> dict:
        out = []
        for name in engine.bundled_names():
            sc = engine.load_bundled(name)
            out.append({"name": name, "mode": sc.mode,
                        "duration_s": sc.duration_s,
                        "n_robots": len(sc.initial_positions)})
        return {"scenarios": out}

    @app.post("/session")
    def create_session(body: dict) -> dict:
        name = body.get("scenario", app.state.default_scenario)
        try:
            sc = _live_variant(engine.load_bundled(name), body.get("mode"),
                               body.get("duration_s"))
            sid = uuid.uuid4().hex[:12]
            app.state.sessions[sid] = LiveSession(
                sid, sc, realtime=bool(body.get("realtime", True)))
        except ScenarioError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return {"session_id": sid, "scenario": sc.name, "mode": sc.mode,
                "duration_s": sc.duration_s}

    def _get(sid: str) -> LiveSession:
        s = app.state.sessions.get(sid)
        if s is None:
            raise HTTPException(status_code=404, detail="no such session")
        return s

    @app.get("/session/{sid}")
    def session_status(sid: str) -> dict:
        s = _get(sid)
        return {"session_id": s.id, "t": float(s.sim.t),
                "finished": s.verdict is not None,
                "malformed_frames": s.malformed}

    @app.get("/session/{sid}/verdict")
    def session_verdict(sid: str) -> dict:
        s = _get(sid)
        if s.verdict is None:
            raise HTTPException(status_code=409, detail="session still running")
        return s.verdict

    @app.get("/session/{sid}/commands")
    def session_commands(sid: str) -> dict:
        return {"commands": _get(sid).command_log()}

    @app.post("/session/{sid}/stop")
    def session_stop(sid: str) -> dict:
        s = _get(sid)
        s.request_stop()
        s.join(timeout=30.0)
        return {"session_id": sid, "finished": s.verdict is not None}

    @app.websocket("/session/{sid}")
    async def session_socket(ws: WebSocket, sid: str) -> None:
        s = app.state.sessions.get(sid)
        if s is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        s.ensure_started(asyncio.get_running_loop())
        cid, q = s.add_client()
        try:
            await ws.send_text(json.dumps(s.hello_frame()))
            if s.verdict is not None:
                await ws.send_text(json.dumps(
                    {"type": "end", "verdict": s.verdict,
                     "malformed_frames": s.malformed}))

            async def pump_out() -> None:
                while True:
                    await ws.send_text(await q.get())

            async def pump_in() -> None:
                while True:
                    raw = await ws.receive_text()
                    try:
                        data = json.loads(raw)
                        if data.get("type") != "master":
                            raise ValueError("unknown frame type")
                        x = np.asarray([float(a) for a in data["x"]])
                        if x.shape != (s.sim.n_dim,) or not np.all(np.isfinite(x)):
                            raise ValueError("bad target")
                        s.inbox.put(x)
                    except (ValueError, KeyError, TypeError) as e:
                        s.malformed += 1
                        log.debug("dropped malformed frame: %s", e)

            tasks = [asyncio.create_task(pump_out()),
                     asyncio.create_task(pump_in())]
            done, pending = await asyncio.wait(
                tasks, return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            s.remove_client(cid)

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="console")

    return app
