"""FastAPI application exposing /caption, /dense, /embed, /chat.

Mock mode is stateless per request: the request key is recomputed from the
incoming body, the matching fixture file's stored response is returned
verbatim, and an unknown key gets a 404 echoing the key so the caller can
record the missing fixture. Responses are schema-validated before send in
both modes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, Request, Response

from . import wire
from .config import ShimConfig

log = logging.getLogger(__name__)


class FixtureStore:
    """Read-only view of a recorded cache directory (see PROTOCOL.md)."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def lookup(self, role: str, key: str) -> str | None:
        path = self.root / role / f"{key}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))["response"]


def _json_response(role: str, body_text: str, status: int = 200) -> Response:
    violations = wire.validate_response(role, json.loads(body_text))
    if violations:
        log.error("refusing to send non-conformant %s response: %s",
                  role, violations[0])
        return Response(content=json.dumps({"error": "internal_contract",
                                            "detail": violations[0]}),
                        status_code=500, media_type="application/json")
    return Response(content=body_text, status_code=status,
                    media_type="application/json")


def create_app(config: ShimConfig) -> FastAPI:
    app = FastAPI(title="t2i backend shim", docs_url=None, redoc_url=None)

    if config.mode == "mock":
        store = FixtureStore(config.fixture_dir)
        backends = None
    else:
        from .real import RealBackends

        store = None
        backends = RealBackends(config.bindings)

    async def handle(path: str, request: Request) -> Response:
        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError:
            return Response(content=json.dumps({"error": "bad_json"}),
                            status_code=400, media_type="application/json")
        try:
            role = wire.infer_role(path, payload)
        except KeyError:
            return Response(content=json.dumps({"error": "unknown_path"}),
                            status_code=404, media_type="application/json")
        violations = wire.validate_request(role, payload)
        if violations:
            return Response(content=json.dumps({"error": "bad_request",
                                                "detail": violations[0]}),
                            status_code=400, media_type="application/json")

        if store is not None:
            key = wire.request_key(role, payload["model"], payload)
            body = store.lookup(role, key)
            if body is None:
                return Response(content=json.dumps({"error": "fixture_missing",
                                                    "key": key}),
                                status_code=404, media_type="application/json")
            return _json_response(role, body)

        result = backends.respond(role, payload)
        return _json_response(role, wire.canonical_json(result))

    @app.post("/caption")
    async def caption(request: Request) -> Response:
        return await handle("/caption", request)

    @app.post("/dense")
    async def dense(request: Request) -> Response:
        return await handle("/dense", request)

    @app.post("/embed")
    async def embed(request: Request) -> Response:
        return await handle("/embed", request)

    @app.post("/chat")
    async def chat(request: Request) -> Response:
        return await handle("/chat", request)

    return app
