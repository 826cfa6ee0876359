"""HTTP service exposing contest sessions to the browser frontend.

Session creation loads a dataset (CSV path or synthetic bundle directory),
trains an unconstrained network and opens a contest session. Threshold
revisions are synchronous; edge cuts retrain in a background thread while
the session reports status "training" and is pollable. Revisions are
serialized per session: a second revision while one is running gets 409.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .data import load_csv, load_synthetic_bundle, standardize
from .discovery import (
    ContestSession,
    ExtractionConfig,
    Revision,
    contest_step,
    extract_edges,
    open_session,
)
from .errors import ConfigError, DomainError, IngestionError, RevisionError, SessionError
from .graphs import graph_to_json
from .network import checkpoint_dict, compute_adjacency, init_network
from .training import TrainConfig, train_unconstrained


class CreateSessionRequest(BaseModel):
    dataset: str
    task: str = "regression"
    target: str | None = None
    tau: float = 0.0
    config: dict[str, Any] = Field(default_factory=dict)
    hidden_sizes: list[int] | None = None


class ReviseRequest(BaseModel):
    kind: str
    tau: float | None = None
    edges: list[tuple[int, int]] | None = None


@dataclass
class ManagedSession:
    session: ContestSession
    status: str = "ready"  # ready | training | closed | error
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    worker: threading.Thread | None = None


class SessionStore:
    def __init__(self) -> None:
        self._sessions: dict[str, ManagedSession] = {}
        self._mutex = threading.Lock()

    def add(self, managed: ManagedSession) -> None:
        with self._mutex:
            self._sessions[managed.session.session_id] = managed

    def get(self, session_id: str) -> ManagedSession | None:
        with self._mutex:
            return self._sessions.get(session_id)


def _session_state(managed: ManagedSession) -> dict:
    session = managed.session
    graph = session.current_graph
    w = compute_adjacency(session.network)
    candidates = sorted(extract_edges(w, 0.0))
    return {
        "session_id": session.session_id,
        "status": managed.status,
        "error": managed.error,
        "task": session.data.task,
        "tau": session.tau,
        "contested": session.contested,
        "node_names": list(session.data.column_names),
        "graph": graph_to_json(graph),
        "edge_weights": [
            {"edge": [i, k], "w": float(w[i, k])} for i, k in sorted(graph.edges)
        ],
        "candidate_edges": [
            {"edge": [i, k], "w": float(w[i, k])} for i, k in candidates
        ],
        "adjacency": [[float(v) for v in row] for row in w],
        "banned_edges": sorted([list(e) for e in session.banned_edges]),
        "metrics": session.current_metrics,
        "history": [record.to_json() for record in session.history],
    }


def _error(status_code: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"detail": detail})


def create_app(store: SessionStore | None = None, frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="causenet contest service")
    sessions = store if store is not None else SessionStore()
    app.state.sessions = sessions

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request body: {exc.errors()}")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        try:
            path = Path(body.dataset)
            if path.is_dir():
                data, _ = load_synthetic_bundle(path)
            else:
                target = body.target
                if target is None:
                    with open(path, "r", encoding="utf-8") as fh:
                        target = fh.readline().split(",")[0].strip()
                data = standardize(load_csv(path, target_column=target, task=body.task))
            config = TrainConfig.from_json(body.config)
            hidden = tuple(body.hidden_sizes) if body.hidden_sizes else None
            net = init_network(data.d, hidden_sizes=hidden, task=data.task, seed=config.seed)
            trained = train_unconstrained(data, net, config)
            session = open_session(
                data, trained.final_network, config, tau=body.tau, session_id=uuid.uuid4().hex
            )
        except (ConfigError, DomainError, IngestionError, FileNotFoundError) as exc:
            return _error(400, str(exc))
        managed = ManagedSession(session=session)
        sessions.add(managed)
        return _session_state(managed)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        managed = sessions.get(session_id)
        if managed is None:
            return _error(404, f"no session {session_id}")
        with managed.lock:
            return _session_state(managed)

    @app.get("/sessions/{session_id}/extract")
    def preview_extraction(session_id: str, tau: float = Query(..., ge=0.0)):
        """Read-only extraction preview at an arbitrary threshold, before
        cycle repair; used by the frontend slider."""
        managed = sessions.get(session_id)
        if managed is None:
            return _error(404, f"no session {session_id}")
        with managed.lock:
            w = compute_adjacency(managed.session.network)
        edges = sorted(extract_edges(w, tau))
        return {"tau": tau, "edges": [list(e) for e in edges]}

    @app.post("/sessions/{session_id}/revise")
    def revise(session_id: str, body: ReviseRequest):
        managed = sessions.get(session_id)
        if managed is None:
            return _error(404, f"no session {session_id}")
        with managed.lock:
            if managed.status == "training":
                return _error(409, "a revision is already training")
            if managed.status == "closed" or not managed.session.contested:
                return _error(409, "session is closed")
            try:
                revision = Revision(
                    kind=body.kind,
                    tau=body.tau,
                    removed_edges=tuple(body.edges or ()),
                )
            except RevisionError as exc:
                return _error(400, str(exc))
            if revision.kind == "accept":
                return _error(400, "use POST /sessions/{id}/accept to close a session")
            if revision.kind == "set-tau":
                try:
                    contest_step(managed.session, revision)
                except (RevisionError, SessionError) as exc:
                    return _error(400, str(exc))
                return _session_state(managed)
            # cut-edges: validate eagerly, then retrain in the background.
            missing = set(revision.removed_edges) - set(managed.session.current_graph.edges)
            if missing:
                return _error(400, f"cannot cut edges not in the shown graph: {sorted(missing)}")
            managed.status = "training"

            def work() -> None:
                try:
                    contest_step(managed.session, revision)
                    with managed.lock:
                        managed.status = "ready"
                except Exception as exc:  # surfaced through the status field
                    with managed.lock:
                        managed.status = "error"
                        managed.error = str(exc)

            managed.worker = threading.Thread(target=work, daemon=True)
            managed.worker.start()
            return _session_state(managed)

    @app.post("/sessions/{session_id}/accept")
    def accept(session_id: str):
        managed = sessions.get(session_id)
        if managed is None:
            return _error(404, f"no session {session_id}")
        with managed.lock:
            if managed.status == "training":
                return _error(409, "a revision is still training")
            if managed.status == "closed" or not managed.session.contested:
                return _error(409, "session is already closed")
            graph, metrics = contest_step(managed.session, Revision(kind="accept"))
            managed.status = "closed"
            return {
                "session_id": session_id,
                "graph": graph_to_json(graph),
                "metrics": metrics,
                "checkpoint": f"/sessions/{session_id}/checkpoint",
            }

    @app.get("/sessions/{session_id}/checkpoint")
    def checkpoint(session_id: str):
        managed = sessions.get(session_id)
        if managed is None:
            return _error(404, f"no session {session_id}")
        with managed.lock:
            return checkpoint_dict(managed.session.network)

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")

    return app


def http_serve(host: str = "127.0.0.1", port: int = 8000, frontend_dir: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(frontend_dir=frontend_dir), host=host, port=port)
