"""HTTP session service: pipelines as managed, isolated sessions.

JSON wire protocol over FastAPI. One in-flight turn per session is
enforced with a non-blocking lock (409 on contention); envelopes are
buffered per session and also delivered incrementally over a
server-sent-event stream.
"""

from __future__ import annotations

import json
import threading
from typing import Iterator

from fastapi import FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, ConfigDict

from .core import envelope_to_wire
from .pipeline import (
    ClosedSessionError,
    Pipeline,
    PipelineConfig,
    TurnInput,
)
from .operators import OperatorError
from .representation import RepresentationError, render_depth, export_points, to_wkpc

SSE_HEARTBEAT_S = 15.0


class SessionCreateBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: str
    map: str | None = None
    seed: int | None = None
    kernel: dict | None = None
    memory: dict | None = None
    backends: dict | None = None
    template: dict | None = None


class QueryBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    text: str


class ControlSignal(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    value: float


class StepBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: str | None = None
    actions: list[str | ControlSignal] | None = None
    query: QueryBody | None = None
    text: str | None = None
    controls: dict | None = None
    waveform_b64: str | None = None


class _SessionEntry:
    def __init__(self, pipeline: Pipeline):
        self.pipeline = pipeline
        self.lock = threading.Lock()
        self.events: list[dict] = []
        self.condition = threading.Condition()
        self.log: list[dict] = []

    def publish(self, wire_envelope: dict) -> None:
        with self.condition:
            self.events.append(wire_envelope)
            self.condition.notify_all()


class SessionRegistry:
    def __init__(self, defaults: dict | None = None):
        self.defaults = defaults or {}
        self._entries: dict[str, _SessionEntry] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def create(self, body: dict) -> str:
        config_obj = dict(self.defaults)
        config_obj.update({k: v for k, v in body.items() if v is not None})
        config = PipelineConfig.from_dict(config_obj)
        with self._lock:
            self._counter += 1
            session_id = f"s-{self._counter:06d}"
        pipeline = Pipeline.build(config, session_id=session_id)
        with self._lock:
            self._entries[session_id] = _SessionEntry(pipeline)
        return session_id

    def get(self, session_id: str) -> _SessionEntry | None:
        with self._lock:
            return self._entries.get(session_id)

    def remove(self, session_id: str) -> _SessionEntry | None:
        with self._lock:
            return self._entries.pop(session_id, None)


def _step_body_to_turn_input(body: StepBody) -> TurnInput:
    obj: dict = {}
    if body.task is not None:
        obj["task"] = body.task
    if body.actions is not None:
        obj["actions"] = [
            a if isinstance(a, str) else {"name": a.name, "value": a.value}
            for a in body.actions
        ]
    if body.query is not None:
        obj["query"] = {"kind": body.query.kind, "text": body.query.text}
    if body.text is not None:
        obj["text"] = body.text
    if body.controls is not None:
        obj["controls"] = body.controls
    if body.waveform_b64 is not None:
        obj["waveform_b64"] = body.waveform_b64
    return TurnInput.from_dict(obj)


def create_app(defaults: dict | None = None) -> FastAPI:
    app = FastAPI(title="worldkit session service")
    # The browser client is served separately; sessions carry no
    # credentials, so a permissive policy is fine.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    registry = SessionRegistry(defaults)
    app.state.registry = registry

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreateBody):
        try:
            session_id = registry.create(body.model_dump())
        except ValueError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, body: StepBody):
        entry = registry.get(session_id)
        if entry is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        if not entry.lock.acquire(blocking=False):
            return JSONResponse({"detail": "turn already in flight"}, status_code=409)
        try:
            turn_input = _step_body_to_turn_input(body)
            envelope = entry.pipeline.call_once(turn_input)
        except ClosedSessionError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=410)
        except (OperatorError, ValueError) as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        finally:
            entry.lock.release()
        wire = envelope_to_wire(envelope)
        entry.log.append({"input": turn_input.to_dict(), "envelope": wire})
        entry.publish(wire)
        return wire

    @app.get("/sessions/{session_id}/export")
    def export_session(
        session_id: str,
        format: str = Query(...),
        yaw: float = 0.0,
        rays: int = 32,
        fov: float = 90.0,
        polar: float = 0.0,
        azimuth: float = 0.0,
    ):
        entry = registry.get(session_id)
        if entry is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        pipeline = entry.pipeline
        if format == "pointcloud":
            output = export_points(pipeline.session.grid)
            return PlainTextResponse(to_wkpc(output.points))
        if format == "depth":
            pose = pipeline.session.state.pose
            camera = (pose.x + 0.5, pose.y + 0.5)
            try:
                depth = render_depth(pipeline.session.grid, camera, yaw, rays, fov)
            except RepresentationError as exc:
                return JSONResponse({"detail": str(exc)}, status_code=422)
            return {
                "rays": depth.rays,
                "fov": depth.fov,
                "yaw": yaw,
                "camera": {"x": camera[0], "y": camera[1]},
                "depths": list(depth.depths),
                "polar": polar,
                "azimuth": azimuth,
            }
        if format == "memory-log":
            return PlainTextResponse(pipeline.memory.export_log(session_id))
        return JSONResponse({"detail": f"unknown export format: {format!r}"}, status_code=400)

    @app.get("/sessions/{session_id}/memory")
    def memory_timeline(session_id: str):
        entry = registry.get(session_id)
        if entry is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        records = entry.pipeline.memory.records(session_id)
        return {
            "records": [
                {
                    "id": r.id,
                    "step": r.step,
                    "modality": r.modality.value,
                    "weight": r.weight,
                    "pinned": r.pinned,
                    "payload_digest": r.payload_digest,
                    "metadata": r.metadata,
                }
                for r in records
            ]
        }

    @app.delete("/sessions/{session_id}", status_code=204)
    def close_session(session_id: str):
        entry = registry.remove(session_id)
        if entry is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        entry.pipeline.close()
        with entry.condition:
            entry.condition.notify_all()
        return Response(status_code=204)

    @app.get("/sessions/{session_id}/events")
    def event_stream(session_id: str, request: Request, limit: int | None = None):
        entry = registry.get(session_id)
        if entry is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)

        def generate() -> Iterator[str]:
            sent = 0
            while True:
                with entry.condition:
                    if sent >= len(entry.events):
                        entry.condition.wait(timeout=SSE_HEARTBEAT_S)
                    batch = entry.events[sent:]
                if not batch:
                    if registry.get(session_id) is None:
                        return
                    yield ": keepalive\n\n"
                    continue
                for event in batch:
                    yield f"id: {sent}\ndata: {json.dumps(event, sort_keys=True)}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
