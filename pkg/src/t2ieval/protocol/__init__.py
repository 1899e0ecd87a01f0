"""Wire protocol shared by the client gateway and any backend server.

The JSON Schema files in this directory define the request/response bodies
for the four model roles; PROTOCOL.md documents paths, request keys, and the
cache layout. This module loads the schemas and implements the canonical
serialization and key derivation exactly as documented.
"""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

import jsonschema

ROLES = ("caption", "dense_caption", "embed_text", "embed_image", "chat")

# role -> URL path on a conforming server
ROLE_PATHS = {
    "caption": "/caption",
    "dense_caption": "/dense",
    "embed_text": "/embed",
    "embed_image": "/embed",
    "chat": "/chat",
}

# role -> (request schema, response schema) file stem
_SCHEMA_STEMS = {
    "caption": "caption",
    "dense_caption": "dense",
    "embed_text": "embed",
    "embed_image": "embed",
    "chat": "chat",
}


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    """Load a schema file bundled with the package, e.g. ``chat_response``."""
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name: str) -> jsonschema.Validator:
    schema = load_schema(name)
    return jsonschema.Draft202012Validator(schema)


def request_schema_name(role: str) -> str:
    return f"{_SCHEMA_STEMS[role]}_request"


def response_schema_name(role: str) -> str:
    return f"{_SCHEMA_STEMS[role]}_response"


def validate_request(role: str, payload: dict) -> list[str]:
    """Return a list of schema violations (empty when conformant)."""
    v = _validator(request_schema_name(role))
    return [e.message for e in v.iter_errors(payload)]


def validate_response(role: str, payload: dict) -> list[str]:
    v = _validator(response_schema_name(role))
    return [e.message for e in v.iter_errors(payload)]


def canonical_json(payload: dict) -> str:
    """Canonical serialization: sorted keys, compact separators, raw UTF-8."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(role: str, model_id: str, payload: dict) -> str:
    """256-bit content address of a request; field-order independent."""
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    material = f"{role}\n{model_id}\n{canonical_json(payload)}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def infer_role(path: str, payload: dict) -> str:
    """Map an incoming (path, payload) on a server back to the role name."""
    path = "/" + path.strip("/")
    if path == "/embed":
        return "embed_text" if "text" in payload else "embed_image"
    for role, role_path in ROLE_PATHS.items():
        if role_path == path:
            return role
    raise ValueError(f"no role is served at {path!r}")
