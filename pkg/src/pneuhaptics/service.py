"""HTTP + WebSocket session service for the experimenter console.

Wraps live study sessions around the emulated rig: REST endpoints create
sessions, start trials, and record responses (response time is computed
server-side on the session's clock); a WebSocket streams chamber state at
20 Hz for monitoring. The clock is simulated by default and moved explicitly
with POST /sessions/{id}/advance, which keeps request timing deterministic
for tests; --realtime mode ticks it against wall time instead.
"""

import asyncio
import json
from contextlib import asynccontextmanager
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .controller import ControllerConfig
from .errors import AnalysisError
from .protocol import FrameReceiver, encode, make_frame
from .rendering import MATERIAL_NAMES, sliding_schedule
from .rig import Rig
from .sensing import FULL_SCALE_KPA, GAIN_PER_KPA
from .statics import DEFAULT_LAYOUT
from .study import (SLIDING_TOKENS, TASKS, VIBRO_FREQS, VIBRO_MATERIALS,
                    TaskSpec, TrialRecord, analyze, load_patterns, schedule,
                    stimulus_frame)

STREAM_PERIOD_S = 0.05  # 20 Hz live stream
REALTIME_STEP_MS = 10


class CreateSession(BaseModel):
    task: str
    seed: int = 0
    participant: str = "anonymous"
    repetitions: int = 5
    isi_s: float = 2.0
    id: str | None = None


class ResponseBody(BaseModel):
    response: int


class Advance(BaseModel):
    duration_s: float


class LiveSession:
    """One session's state machine: idle -> stimulus -> isi -> idle."""

    def __init__(self, sid, req: CreateSession, out_dir=None):
        self.id = sid
        self.spec = TaskSpec(req.task, repetitions=req.repetitions,
                             isi_s=req.isi_s)
        self.participant = req.participant
        self.seed = req.seed
        self.trials = schedule(req.task, req.seed, req.repetitions)
        self.patterns = load_patterns() if req.task == "patterns" else None
        self.rig = Rig(ControllerConfig(mode={"patterns": "contact",
                                              "sliding": "sliding",
                                              "vibro": "vibro"}[req.task]),
                       log_commands=False)
        self.receiver = FrameReceiver()
        self.records = []
        self.state = "idle"
        self.trial_index = 0  # next trial to start
        self.onset_ms = 0
        self.stimulus = None
        self.isi_until_ms = 0
        self.closed = False
        self._seq = 0
        self.lock = asyncio.Lock()
        self.log_path = None
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            self.log_path = out / f"{sid}_trials.jsonl"
            self.log_path.write_text("")

    # -- clock ----------------------------------------------------------

    def _push(self, frame):
        accepted = self.receiver.push(encode(frame),
                                      arrival_time=self.rig.time_s)
        if accepted is not None:
            self.rig.push_frame(accepted)

    def _advance(self, ms):
        rig = self.rig
        target = rig.t_ms + ms
        while rig.t_ms < target:
            if self.state == "stimulus":
                elapsed = rig.t_ms - self.onset_ms
                if elapsed % 20 == 0:
                    self._push(stimulus_frame(self.spec, self.stimulus,
                                              self.patterns, elapsed,
                                              self._seq, rig.t_ms))
                    self._seq += 1
                rig.tick()
            else:
                rig.tick(1, step_ms=min(10, target - rig.t_ms))
        if self.state == "isi" and rig.t_ms >= self.isi_until_ms:
            self.state = "idle"

    # -- state transitions ------------------------------------------------

    def start_next(self):
        if self.state == "stimulus":
            raise HTTPException(409, "a stimulus is already active")
        if self.state == "isi" and self.rig.t_ms < self.isi_until_ms:
            raise HTTPException(409, "inter-stimulus interval still running")
        if self.trial_index >= len(self.trials):
            return {"session": self.id, "status": "complete",
                    "completed": len(self.records), "total": len(self.trials)}
        self.stimulus = self.trials[self.trial_index]
        self.onset_ms = self.rig.t_ms
        if self.spec.kind == "sliding":
            token = SLIDING_TOKENS[self.stimulus - 1]
            if token in ("CW", "CCW"):
                self.rig.present_schedule(sliding_schedule(token))
        self.state = "stimulus"
        # the onset frame goes out on the first clock edge after this call,
        # so RT is exactly the advance between next and response
        return {"session": self.id, "status": "stimulus",
                "trial_index": self.trial_index,
                "total": len(self.trials),
                "onset_s": self.onset_ms / 1000.0}

    def submit_response(self, response):
        if self.state != "stimulus":
            raise HTTPException(409, "no active stimulus")
        if not (1 <= response <= TASKS[self.spec.kind]):
            raise HTTPException(422, "response id out of range for task")
        now = self.rig.t_ms
        record = TrialRecord(self.participant, self.spec.kind,
                             self.trial_index, self.stimulus, int(response),
                             (now - self.onset_ms) / 1000.0,
                             self.onset_ms / 1000.0, now / 1000.0)
        self.records.append(record)
        if self.log_path is not None:
            with open(self.log_path, "a") as fh:
                fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
        self._push(make_frame(self._seq, now, (0.0,) * 4, (0, 0, 0, 0),
                              (0.0, 0.0, 0.0), 0.0))
        self._seq += 1
        self.trial_index += 1
        self.stimulus = None
        self.state = "isi"
        self.isi_until_ms = now + int(round(self.spec.isi_s * 1000))
        return record

    def snapshot(self):
        pressures = self.rig.system.pressures
        valves = self.rig.controller.valves
        grid = self.rig.sense_map().values
        trial = None
        if self.state == "stimulus":
            trial = {"trial_index": self.trial_index,
                     "onset_s": self.onset_ms / 1000.0}
        stats = self.receiver.counters()
        return {"session": self.id, "t": round(self.rig.time_s, 3),
                "state": self.state,
                "pressures_kpa": [round(float(p) / 1000.0, 4) for p in pressures],
                "valves": [bool(v) for v in valves],
                "trial": trial,
                "map": [[round(float(v), 3) for v in row] for row in grid],
                "counters": stats}

    def results(self):
        report = None
        report_error = None
        try:
            report = json.loads(analyze(self.records).to_json())
        except AnalysisError as exc:
            report_error = str(exc)
        return {"session": self.id, "task": self.spec.kind,
                "participant": self.participant, "seed": self.seed,
                "completed": len(self.records), "total": len(self.trials),
                "records": [asdict(r) for r in self.records],
                "report": report, "report_error": report_error}


def create_app(out_dir=None, realtime=False):
    sessions = {}
    counter = {"n": 0}

    @asynccontextmanager
    async def lifespan(app):
        task = None
        if realtime:
            task = asyncio.create_task(_wall_ticker())
        yield
        if task is not None:
            task.cancel()

    async def _wall_ticker():
        while True:
            await asyncio.sleep(REALTIME_STEP_MS / 1000.0)
            for session in list(sessions.values()):
                if not session.closed:
                    async with session.lock:
                        session._advance(REALTIME_STEP_MS)

    app = FastAPI(title="pneuhaptics session service", lifespan=lifespan)

    def _get(sid) -> LiveSession:
        session = sessions.get(sid)
        if session is None or session.closed:
            raise HTTPException(404, f"unknown session {sid!r}")
        return session

    @app.get("/reference")
    async def reference():
        # stimulus alternatives per task, from the same sources the engine
        # presents from (one source of truth for console reference sheets)
        patterns = load_patterns()
        return {"tasks": dict(TASKS),
                "patterns": {str(k): sorted(v) for k, v in patterns.items()},
                "sliding": list(SLIDING_TOKENS),
                "vibro": [{"material": MATERIAL_NAMES[m], "freq_hz": f}
                          for m, f in zip(VIBRO_MATERIALS, VIBRO_FREQS)],
                "layout": {str(c): list(rc) for c, rc in DEFAULT_LAYOUT.items()},
                "map_full_scale": GAIN_PER_KPA * FULL_SCALE_KPA,
                "pressure_full_scale_kpa": FULL_SCALE_KPA}

    @app.post("/sessions", status_code=201)
    async def create_session(req: CreateSession):
        if req.task not in TASKS:
            raise HTTPException(422, f"task must be one of {sorted(TASKS)}")
        if req.repetitions < 1:
            raise HTTPException(422, "repetitions must be at least 1")
        counter["n"] += 1
        sid = req.id if req.id is not None else f"s{counter['n']}"
        if sid in sessions:
            raise HTTPException(409, f"session {sid!r} already exists")
        session = LiveSession(sid, req, out_dir=out_dir)
        sessions[sid] = session
        return {"session": sid, "task": req.task, "seed": req.seed,
                "participant": req.participant,
                "trial_count": len(session.trials),
                "stimulus_count": TASKS[req.task]}

    @app.post("/sessions/{sid}/next")
    async def next_trial(sid: str):
        session = _get(sid)
        async with session.lock:
            return session.start_next()

    @app.post("/sessions/{sid}/response")
    async def submit_response(sid: str, body: ResponseBody):
        session = _get(sid)
        async with session.lock:
            return asdict(session.submit_response(body.response))

    @app.post("/sessions/{sid}/advance")
    async def advance(sid: str, body: Advance):
        if not (0 < body.duration_s <= 600):
            raise HTTPException(422, "duration_s must be in (0, 600]")
        session = _get(sid)
        async with session.lock:
            session._advance(int(round(body.duration_s * 1000)))
            return {"session": sid, "t": session.rig.time_s,
                    "state": session.state}

    @app.get("/sessions/{sid}/results")
    async def results(sid: str):
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        async with session.lock:
            return session.results()

    @app.delete("/sessions/{sid}")
    async def close_session(sid: str):
        session = _get(sid)
        async with session.lock:
            session.closed = True
        return {"session": sid, "state": "closed"}

    @app.websocket("/sessions/{sid}/live")
    async def live(ws: WebSocket, sid: str):
        await ws.accept()
        session = sessions.get(sid)
        if session is None:
            await ws.send_json({"error": f"unknown session {sid!r}"})
            await ws.close()
            return
        try:
            while not session.closed:
                async with session.lock:
                    snap = session.snapshot()
                await ws.send_json(snap)
                await asyncio.sleep(STREAM_PERIOD_S)
            await ws.send_json({"session": sid, "state": "closed"})
            await ws.close()
        except WebSocketDisconnect:
            pass

    app.state.sessions = sessions
    return app
