"""JSON HTTP surface over the session store."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .exceptions import PersistenceError, SessionError, UuplError
from .serialize import canonical_dumps
from .service import SCHEMA_VERSION, SessionStore


class AnswerBody(BaseModel):
    query_id: str
    choice: int
    level: int


def create_app(store: SessionStore, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="uupl elicitation service")
    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(UuplError)
    async def _uupl_error(request: Request, exc: UuplError):
        status = getattr(exc, "status_code", None)
        if status is None:
            status = 404 if isinstance(exc, PersistenceError) else 400
        return JSONResponse(
            status_code=status,
            content={
                "schema_version": SCHEMA_VERSION,
                "error": type(exc).__name__,
                "detail": str(exc),
            },
        )

    @app.post("/sessions")
    async def create_session(config: dict):
        engine = store.create(config)
        return engine.status()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return store.load(session_id).status()

    @app.get("/sessions/{session_id}/query")
    async def next_query(session_id: str):
        query = store.next_query(session_id)
        return {"schema_version": SCHEMA_VERSION, **query}

    @app.post("/sessions/{session_id}/answer")
    async def submit_answer(session_id: str, body: AnswerBody):
        return store.submit_answer(session_id, body.query_id, body.choice, body.level)

    @app.get("/sessions/{session_id}/posterior")
    async def get_posterior(session_id: str, grid: int = 101):
        return store.load(session_id).posterior_grid(grid)

    @app.get("/sessions/{session_id}/export")
    async def export_session(session_id: str):
        engine = store.load(session_id)
        return Response(
            content=canonical_dumps(engine.to_dict()) + "\n",
            media_type="application/json",
        )

    return app
