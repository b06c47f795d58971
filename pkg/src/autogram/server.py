"""HTTP gateway around sessions.

Each session is a JSON file in the store directory; handlers rebuild the
engine from that file, apply one step, and write the file back before
answering, so a restarted server picks up every conversation where it
stopped. Scripted backend queues are part of the stored state. A per-session
lock turns concurrent mutation into 409 instead of interleaved steps.
"""

from __future__ import annotations

import json
import re
import tempfile
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import authoring, backends, expressions
from .errors import AutogramError
from .model import GraphModel
from .runtime import Session

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


class CreateSessionBody(BaseModel):
    session_id: str | None = None
    seed: int = 0


class ReplyBody(BaseModel):
    text: str


class _Store:
    """One JSON file per session, written before any 2xx goes out."""

    def __init__(self, directory: str | None):
        self.dir = Path(directory or tempfile.mkdtemp(prefix="autogram-sessions-"))
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.json"

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).exists()

    def load(self, session_id: str) -> dict:
        return json.loads(self.path(session_id).read_text(encoding="utf-8"))

    def save(self, session_id: str, doc: dict) -> None:
        tmp = self.path(session_id).with_suffix(".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        tmp.replace(self.path(session_id))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.json"))


def create_app(
    graph: GraphModel,
    fixture: dict | None = None,
    store_dir: str | None = None,
    expose_variables: bool = False,
) -> FastAPI:
    app = FastAPI(title="autogram gateway")
    store = _Store(store_dir)
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()
    self_ref = graph.config.self_referential

    def lock_for(session_id: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(session_id, threading.Lock())

    app.state.session_locks = locks
    app.state.store = store

    def build_session(doc: dict, seed: int) -> Session:
        session_graph = graph.copy() if self_ref else graph
        if self_ref:
            for node in doc.get("graph_nodes", []):
                if node["name"] not in session_graph.nodes:
                    session_graph.add_node(authoring.NodeSpec.from_dict(node))
        scripted_state = doc.get("scripted")
        if scripted_state is not None:
            merged = dict(fixture or {})
            merged.update(scripted_state)
            chatbot = backends.ScriptedBackend.from_fixture(merged)
        else:
            chatbot = backends.backend_from_settings(graph.config.chatbot, fixture)
        classifier = chatbot
        if graph.config.classifier.mode == "http":
            classifier = backends.backend_from_settings(graph.config.classifier)
        userbot = chatbot
        if graph.config.userbot.mode == "http":
            userbot = backends.backend_from_settings(graph.config.userbot)
        session = Session(
            session_graph,
            chatbot=chatbot,
            classifier=classifier,
            userbot=userbot,
            seed=seed,
            validate=False,
        )
        if doc.get("memory") is not None:
            session.restore_memory(doc["memory"])
        if doc.get("rng") is not None:
            version, state, gauss = doc["rng"]
            session.rng.setstate((version, tuple(state), gauss))
        return session

    def persist(session_id: str, doc: dict, session: Session) -> None:
        doc["memory"] = session.memory.serialize()
        version, state, gauss = session.rng.getstate()
        doc["rng"] = [version, list(state), gauss]
        if isinstance(session.chatbot, backends.ScriptedBackend):
            doc["scripted"] = {
                "responses": session.chatbot.responses,
                "answers": session.chatbot.answers,
                "strict": session.chatbot.strict,
            }
        if self_ref:
            doc["graph_nodes"] = [
                spec.to_dict()
                for name, spec in session.graph.nodes.items()
                if name not in graph.nodes
            ]
        store.save(session_id, doc)

    def load_doc(session_id: str) -> dict:
        if not _SESSION_ID_RE.match(session_id):
            raise HTTPException(status_code=422, detail="bad session id")
        if not store.exists(session_id):
            raise HTTPException(status_code=404, detail="no such session")
        return store.load(session_id)

    def state_payload(session_id: str, doc: dict, session: Session) -> dict:
        mem = session.memory
        turns = [
            {
                "node": t.node_name,
                "user": t.user_reply,
                "agent": t.model_output,
            }
            for frame in mem.stack
            for t in frame.turns
            if t.is_reply_to_user
        ]
        payload = {
            "session_id": session_id,
            "last_node": mem.last_node,
            "visit_log": list(mem.visit_log),
            "transcript": turns,
            "stack_depth": len(mem.stack),
        }
        if expose_variables:
            payload["variables"] = {
                name: expressions.display_value(value)
                for name, value in mem.stack[0].variables.items()
            }
        return payload

    @app.exception_handler(AutogramError)
    def engine_error(request, exc: AutogramError):
        return JSONResponse(
            status_code=500,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    @app.get("/graph")
    def get_graph(session: str | None = None):
        if session is None:
            return authoring.export_graph_document(graph)
        doc = load_doc(session)
        live = build_session(doc, doc.get("seed", 0))
        return authoring.export_graph_document(live.graph)

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session_id = body.session_id or uuid.uuid4().hex[:12]
        if not _SESSION_ID_RE.match(session_id):
            raise HTTPException(status_code=422, detail="bad session id")
        if store.exists(session_id):
            raise HTTPException(status_code=409, detail="session already exists")
        doc = {"seed": body.seed, "memory": None}
        session = build_session(doc, body.seed)
        persist(session_id, doc, session)
        return state_payload(session_id, doc, session)

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        doc = load_doc(session_id)
        session = build_session(doc, doc.get("seed", 0))
        return state_payload(session_id, doc, session)

    @app.post("/sessions/{session_id}/reply")
    def post_reply(session_id: str, body: ReplyBody):
        doc = load_doc(session_id)
        lock = lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session is busy")
        try:
            session = build_session(doc, doc.get("seed", 0))
            reply = session.reply(body.text)
            persist(session_id, doc, session)
            return {
                "reply": reply,
                "node": session.memory.last_node,
                "state": state_payload(session_id, doc, session),
            }
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/simulate_user")
    def post_simulate(session_id: str):
        doc = load_doc(session_id)
        lock = lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session is busy")
        try:
            session = build_session(doc, doc.get("seed", 0))
            simulated = session.simulate_user()
            persist(session_id, doc, session)
            return {"text": simulated.text, "index": simulated.index}
        finally:
            lock.release()

    return app
