"""HTTP facade over the session engine for the annotation UI and scripts.

The layer is stateless glue: every mutation appends to the session's event
log before the response is sent, and replaying a request script against a
fresh server reproduces the event log minus wall_clock stamps.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .records import Dataset, EmbeddingTable, Gazetteer
from .session import (BadLabelError, DuplicateLabelError, Session,
                      SessionCompletedError, SessionConfig, SessionError,
                      UnknownItemError)


class ApiError(Exception):
    """Error with a stable code string and HTTP status."""

    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class LabelRequest(BaseModel):
    item_id: str
    class_name: str = Field(alias="class")
    elapsed_ms: float

    model_config = {"populate_by_name": True}


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def placeholder_png(item_id: str, size: int = 128) -> bytes:
    """Solid-color PNG keyed by a hash of the item id."""
    from PIL import Image

    digest = hashlib.sha256(item_id.encode("utf-8")).digest()
    color = (digest[0], digest[1], digest[2])
    import io

    buf = io.BytesIO()
    Image.new("RGB", (size, size), color).save(buf, format="PNG")
    return buf.getvalue()


class SessionStore:
    """In-memory sessions plus optional per-session JSONL event sinks."""

    def __init__(self, dataset: Dataset, embeddings: EmbeddingTable | None,
                 gazetteer: Gazetteer | None, log_dir: Path | None,
                 clock: Callable[[], str] | None):
        self.dataset = dataset
        self.embeddings = embeddings
        self.gazetteer = gazetteer
        self.log_dir = log_dir
        self.clock = clock
        self.sessions: dict[str, Session] = {}
        self._flushed: dict[str, int] = {}

    def create(self, config: SessionConfig) -> str:
        session = Session(config, self.dataset, embeddings=self.embeddings,
                          gazetteer=self.gazetteer, clock=self.clock)
        session_id = uuid.uuid4().hex[:12]
        self.sessions[session_id] = session
        self._flushed[session_id] = 0
        self.flush(session_id)
        return session_id

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")

    def flush(self, session_id: str) -> None:
        if self.log_dir is None:
            return
        session = self.sessions[session_id]
        events = session.event_dicts()
        start = self._flushed[session_id]
        if start >= len(events):
            return
        path = self.log_dir / f"{session_id}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            for event in events[start:]:
                fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        self._flushed[session_id] = len(events)


def create_app(dataset: Dataset, embeddings: EmbeddingTable | None = None,
               gazetteer: Gazetteer | None = None, log_dir=None,
               ui_dir=None, clock: Callable[[], str] | None = _utc_now) -> FastAPI:
    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
    store = SessionStore(dataset, embeddings, gazetteer, log_dir, clock)
    records_by_id = dataset.by_id()
    app = FastAPI(title="caiaf", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.get("/api/info")
    def info():
        return {
            "classes": list(dataset.classes),
            "feature_dim": dataset.feature_dim,
            "n_records": len(dataset.records),
            "sessions": sorted(store.sessions),
        }

    @app.post("/api/sessions")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "bad_request", "body must be JSON")
        try:
            config = SessionConfig.from_dict(body)
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "bad_request", f"invalid session config: {exc}")
        try:
            session_id = store.create(config)
        except (SessionError, ValueError) as exc:
            raise ApiError(400, "bad_request", str(exc))
        return {"session_id": session_id}

    @app.get("/api/sessions/{session_id}/current-batch")
    def current_batch(session_id: str):
        session = store.get(session_id)
        base = {
            "session_complete": session.is_complete,
            "total_batches": session.config.total_batches,
            "classes": list(session.dataset.classes),
            "mode": session.config.mode,
        }
        if session.is_complete:
            return {**base, "batch_index": session.config.total_batches - 1,
                    "groups": [], "labeled": []}
        plan = session.current_plan
        return {**base, "batch_index": plan.batch_index, "groups":
                plan.to_dict()["groups"], "labeled": session.labeled_in_open_batch}

    @app.post("/api/sessions/{session_id}/labels")
    def submit_label(session_id: str, label: LabelRequest):
        session = store.get(session_id)
        try:
            status = session.submit_label(label.item_id, label.class_name,
                                          label.elapsed_ms)
        except DuplicateLabelError as exc:
            raise ApiError(409, "duplicate_label", str(exc))
        except SessionCompletedError as exc:
            raise ApiError(409, "batch_closed", str(exc))
        except (UnknownItemError, BadLabelError) as exc:
            raise ApiError(400, "bad_request", str(exc))
        finally:
            store.flush(session_id)
        return {"status": status}

    @app.get("/api/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        session = store.get(session_id)
        m = session.metrics()
        return {
            "batches": [{
                "batch_index": b.batch_index,
                "batch_ms": b.batch_ms,
                "cumulative_ms": b.cumulative_ms,
                "holdout_f1": b.holdout_f1,
                "labeled_count": b.labeled_count,
            } for b in m.batches],
            "final_f1": m.final_f1,
            "session_complete": session.is_complete,
        }

    @app.get("/api/sessions/{session_id}/events")
    def events(session_id: str):
        session = store.get(session_id)
        return {"events": session.event_dicts()}

    @app.get("/api/images/{item_id}")
    def image(item_id: str):
        record = records_by_id.get(item_id)
        if record is None:
            raise ApiError(404, "unknown_item", f"no item {item_id!r}")
        if record.image_uri:
            path = Path(record.image_uri)
            if path.is_file():
                return FileResponse(path)
        return Response(content=placeholder_png(item_id), media_type="image/png")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
