"""Wire-protocol helpers, implemented from the protocol spec.

The JSON Schemas are loaded from the harness package's ``protocol``
directory — the shared files both sides validate against. Key derivation and
canonical serialization follow PROTOCOL.md exactly: sorted keys, compact
separators, raw UTF-8; SHA-256 over "<role>\\n<model>\\n<canonical body>".
"""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

import jsonschema

ROLE_BY_PATH = {
    "/caption": "caption",
    "/dense": "dense_caption",
    "/chat": "chat",
}

SCHEMA_STEMS = {
    "caption": "caption",
    "dense_caption": "dense",
    "embed_text": "embed",
    "embed_image": "embed",
    "chat": "chat",
}


def infer_role(path: str, payload: dict) -> str:
    path = "/" + path.strip("/")
    if path == "/embed":
        return "embed_text" if "text" in payload else "embed_image"
    role = ROLE_BY_PATH.get(path)
    if role is None:
        raise KeyError(path)
    return role


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def request_key(role: str, model_id: str, payload: dict) -> str:
    material = f"{role}\n{model_id}\n{canonical_json(payload)}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


@lru_cache(maxsize=None)
def _schema(name: str) -> jsonschema.Validator:
    text = (resources.files("t2ieval.protocol")
            .joinpath(f"{name}.schema.json").read_text("utf-8"))
    return jsonschema.Draft202012Validator(json.loads(text))


def validate_request(role: str, payload: dict) -> list[str]:
    v = _schema(f"{SCHEMA_STEMS[role]}_request")
    return [e.message for e in v.iter_errors(payload)]


def validate_response(role: str, payload: dict) -> list[str]:
    v = _schema(f"{SCHEMA_STEMS[role]}_response")
    return [e.message for e in v.iter_errors(payload)]
